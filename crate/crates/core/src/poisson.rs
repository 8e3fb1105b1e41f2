//! Weighted Poisson brackets
//! `{f, g} = sum_j p_j(a_j, b_j) (df/da_j dg/db_j - dg/da_j df/db_j)`.

use serde::{Deserialize, Serialize};

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::laurent::LaurentPoly2;
use crate::linear::{PointConfiguration, SolutionWithJacobian};
use crate::nonlinear::MultiPoly;
use crate::scalar::Scalar;

/// Weight `j` is evaluated at `(a_j, b_j)` only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoissonStructure {
    pub weights: Vec<LaurentPoly2>,
}

impl PoissonStructure {
    pub fn canonical(n: usize) -> Self {
        PoissonStructure { weights: vec![LaurentPoly2::one(); n] }
    }

    /// Only pair `k` (0-based) carries weight 1.
    pub fn slot(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::SlotOutOfRange { slot: k, dim: n });
        }
        let mut weights = vec![LaurentPoly2::zero(); n];
        weights[k] = LaurentPoly2::one();
        Ok(PoissonStructure { weights })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// `"canonical"`, `"slot:k"` (1-based) or `"weights"`.
    pub fn descriptor(&self) -> String {
        let one = LaurentPoly2::one();
        if self.weights.iter().all(|w| *w == one) {
            return "canonical".into();
        }
        let nonzero: Vec<usize> = (0..self.n()).filter(|&j| !self.weights[j].is_zero()).collect();
        if nonzero.len() == 1 && self.weights[nonzero[0]] == one {
            return format!("slot:{}", nonzero[0] + 1);
        }
        "weights".into()
    }

    /// Parse `"canonical"`, `"slot:k"` with 1-based `k`, or a JSON structure.
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        let spec = spec.trim();
        if spec == "canonical" {
            return Ok(Self::canonical(n));
        }
        if let Some(k) = spec.strip_prefix("slot:") {
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad slot in `{spec}`")))?;
            if k == 0 {
                return Err(Error::invalid("slots are numbered from 1"));
            }
            return Self::slot(n, k - 1);
        }
        let ps: PoissonStructure = serde_json::from_str(spec)
            .map_err(|e| Error::invalid(format!("bad structure `{spec}`: {e}")))?;
        if ps.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: ps.n() });
        }
        Ok(ps)
    }

    /// `p_j(a_j, b_j)` for every `j`.
    pub fn eval_weights<S: Scalar>(&self, pts: &PointConfiguration<S>) -> Result<Vec<S>> {
        pts.expect_len(self.n())?;
        self.weights
            .iter()
            .enumerate()
            .map(|(j, p)| p.eval(&pts.a[j], &pts.b[j]))
            .collect()
    }
}

/// Bracket of two gradients given already-evaluated weights.
pub fn bracket_with_weights<S: Scalar>(grad_f: &[S], grad_g: &[S], weights: &[S]) -> Result<S> {
    let n = weights.len();
    for g in [grad_f, grad_g] {
        if g.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: g.len() });
        }
    }
    let mut acc = S::zero();
    for (j, p) in weights.iter().enumerate() {
        let pair = grad_f[j].clone() * grad_g[n + j].clone() - grad_g[j].clone() * grad_f[n + j].clone();
        acc = acc + p.clone() * pair;
    }
    Ok(acc)
}

pub fn bracket<S: Scalar>(
    grad_f: &[S],
    grad_g: &[S],
    ps: &PoissonStructure,
    pts: &PointConfiguration<S>,
) -> Result<S> {
    bracket_with_weights(grad_f, grad_g, &ps.eval_weights(pts)?)
}

/// `{H_i, H_j}` for all pairs.
pub fn bracket_matrix<S: Scalar>(
    sol: &SolutionWithJacobian<S>,
    ps: &PoissonStructure,
    pts: &PointConfiguration<S>,
) -> Result<Vec<Vec<S>>> {
    let n = sol.n();
    let weights = ps.eval_weights(pts)?;
    let mut out = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = bracket_with_weights(&sol.jac[i], &sol.jac[j], &weights)?;
            out[j][i] = -v.clone();
            out[i][j] = v;
        }
    }
    Ok(out)
}

/// Value and gradient of a polynomial function of the `2n` coordinates
/// (`f` has `num_h = 2n`, its `x`/`y` exponents are ignored by passing 1).
fn grad_of<S: Scalar>(f: &MultiPoly, pts: &PointConfiguration<S>) -> Result<Vec<S>> {
    let dp = pts.to_dual();
    let coords: Vec<Dual<S>> = dp.a.into_iter().chain(dp.b).collect();
    Ok(f.eval(&coords, &Dual::one(), &Dual::one())?.gradient(2 * pts.len()))
}

/// `{g, h}` as a dual: its value and its gradient in the coordinates.
fn bracket_as_dual<S: Scalar>(
    g: &MultiPoly,
    h: &MultiPoly,
    ps: &PoissonStructure,
    pts: &PointConfiguration<S>,
) -> Result<Dual<S>> {
    let dim = 2 * pts.len();
    let inner = pts.to_dual();
    // outer duals over inner duals: outer gradient entries carry second derivatives
    let coords: Vec<Dual<Dual<S>>> = inner
        .a
        .iter()
        .chain(&inner.b)
        .enumerate()
        .map(|(slot, v)| {
            let mut grad = vec![Dual::zero(); dim];
            grad[slot] = Dual::one();
            Dual { value: v.clone(), grad }
        })
        .collect();
    let one = Dual::<Dual<S>>::one();
    let gg = g.eval(&coords, &one, &one)?.gradient(dim);
    let hg = h.eval(&coords, &one, &one)?.gradient(dim);
    let weights = ps.eval_weights(&inner)?;
    bracket_with_weights(&gg, &hg, &weights)
}

/// `{f,{g,h}} + {g,{h,f}} + {h,{f,g}}` at the point data.
pub fn jacobi_cyclic_sum<S: Scalar>(
    f: &MultiPoly,
    g: &MultiPoly,
    h: &MultiPoly,
    ps: &PoissonStructure,
    pts: &PointConfiguration<S>,
) -> Result<S> {
    let n = pts.len();
    for p in [f, g, h] {
        if p.num_h() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: p.num_h() });
        }
    }
    let weights = ps.eval_weights(pts)?;
    let term = |outer: &MultiPoly, l: &MultiPoly, r: &MultiPoly| -> Result<S> {
        let inner = bracket_as_dual(l, r, ps, pts)?;
        bracket_with_weights(&grad_of(outer, pts)?, &inner.gradient(2 * n), &weights)
    };
    Ok(term(f, g, h)? + term(g, h, f)? + term(h, f, g)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::linear::solve;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn one_hot(n: usize, slot: usize) -> Vec<Rational> {
        let mut v = vec![q(0, 1); 2 * n];
        v[slot] = q(1, 1);
        v
    }

    fn pts3() -> PointConfiguration<Rational> {
        PointConfiguration::new(vec![q(1, 2), q(2, 1), q(-3, 1)], vec![q(3, 1), q(-1, 5), q(4, 1)]).unwrap()
    }

    #[test]
    fn conjugate_pair_gives_weight() {
        let ps = PoissonStructure {
            weights: vec![
                LaurentPoly2::xy(1, 1),
                LaurentPoly2::from_terms([(0, 2, q(1, 1)), (0, 0, q(3, 1))]),
                LaurentPoly2::one(),
            ],
        };
        let pts = pts3();
        // f = a_2, g = b_2 -> p_2(a_2, b_2) = b_2^2 + 3
        let v = bracket(&one_hot(3, 1), &one_hot(3, 4), &ps, &pts).unwrap();
        assert_eq!(v, q(1, 25) + q(3, 1));
        let v = bracket(&one_hot(3, 0), &one_hot(3, 3), &ps, &pts).unwrap();
        assert_eq!(v, q(3, 2));
    }

    #[test]
    fn antisymmetry_and_slot_separation() {
        let pts = pts3();
        let ps = PoissonStructure::canonical(3);
        let g = vec![q(1, 1), q(2, 3), q(-4, 1), q(5, 1), q(0, 1), q(7, 9)];
        assert_eq!(bracket(&g, &g, &ps, &pts).unwrap(), q(0, 1));
        assert_eq!(bracket(&one_hot(3, 0), &one_hot(3, 4), &ps, &pts).unwrap(), q(0, 1));
        let h = vec![q(2, 1), q(-1, 1), q(1, 3), q(0, 1), q(6, 1), q(1, 1)];
        assert_eq!(
            bracket(&g, &h, &ps, &pts).unwrap(),
            -bracket(&h, &g, &ps, &pts).unwrap()
        );
        assert!(matches!(
            bracket(&g[..4], &h, &ps, &pts),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lagrange_two_commutes() {
        let sys = families::lagrange(2).unwrap();
        let pts = PointConfiguration::new(vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(3, 1)]).unwrap();
        let sol = solve(&sys, &pts).unwrap();
        let m = bracket_matrix(&sol, &PoissonStructure::canonical(2), &pts).unwrap();
        assert_eq!(m, vec![vec![q(0, 1); 2]; 2]);
    }

    #[test]
    fn descriptors_and_parsing() {
        assert_eq!(PoissonStructure::parse("canonical", 3).unwrap().descriptor(), "canonical");
        let s = PoissonStructure::parse("slot:2", 3).unwrap();
        assert_eq!(s.descriptor(), "slot:2");
        assert_eq!(s.weights[1], LaurentPoly2::one());
        assert!(s.weights[0].is_zero());
        assert!(PoissonStructure::parse("slot:0", 3).is_err());
        assert!(PoissonStructure::parse("slot:4", 3).is_err());
        let json = serde_json::to_string(&PoissonStructure { weights: vec![LaurentPoly2::xy(1, 0)] }).unwrap();
        assert_eq!(PoissonStructure::parse(&json, 1).unwrap().descriptor(), "weights");
    }

    #[test]
    fn weight_locality() {
        let pts = pts3();
        let ps = PoissonStructure::slot(3, 1).unwrap();
        let g = vec![q(1, 1), q(2, 1), q(3, 1), q(4, 1), q(5, 1), q(6, 1)];
        let h = vec![q(-1, 1), q(1, 2), q(0, 1), q(2, 1), q(1, 1), q(1, 1)];
        let base = bracket(&g, &h, &ps, &pts).unwrap();
        let mut g2 = g.clone();
        g2[0] = q(100, 1);
        g2[5] = q(-7, 3);
        assert_eq!(bracket(&g2, &h, &ps, &pts).unwrap(), base);
    }

    #[test]
    fn jacobi_on_small_example() {
        // n = 1, coordinates (a, b); f = a^2 b, g = a b^3, h = a + b^2, p = a b + 1
        let f = MultiPoly::zero(2).with_term(&[2, 1], 0, 0, 1);
        let g = MultiPoly::zero(2).with_term(&[1, 3], 0, 0, 1);
        let h = MultiPoly::zero(2).with_term(&[1, 0], 0, 0, 1).with_term(&[0, 2], 0, 0, 1);
        let ps = PoissonStructure {
            weights: vec![LaurentPoly2::from_terms([(1, 1, q(1, 1)), (0, 0, q(1, 1))])],
        };
        let pts = PointConfiguration::new(vec![q(2, 3)], vec![q(-5, 2)]).unwrap();
        assert_eq!(jacobi_cyclic_sum(&f, &g, &h, &ps, &pts).unwrap(), q(0, 1));
    }

    #[test]
    fn nested_bracket_carries_its_gradient() {
        let f = MultiPoly::zero(2).with_term(&[1, 0], 0, 0, 1);
        let g = MultiPoly::zero(2).with_term(&[2, 2], 0, 0, 1);
        let ps = PoissonStructure::canonical(1);
        let pts = PointConfiguration::new(vec![q(3, 1)], vec![q(2, 1)]).unwrap();
        // {a, a^2 b^2} = 2 a^2 b ; its gradient (4ab, 2a^2) = (24, 18)
        let d = bracket_as_dual(&f, &g, &ps, &pts).unwrap();
        assert_eq!(d.value, q(36, 1));
        assert_eq!(d.gradient(2), vec![q(24, 1), q(18, 1)]);
    }
}

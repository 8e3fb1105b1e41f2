//! General separation relations `F_i(H, a_i, b_i) = 0` with polynomial residuals.
//!
//! `H` is found by Newton iteration; its derivatives in the point data come
//! from the implicit function theorem: differentiating residual `i` in `a_k`
//! or `b_k` only picks up an explicit term when `i == k`.

use std::collections::BTreeMap;

use num::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::linalg;
use crate::linear::{LinearSeparationSystem, PointConfiguration, RankReport, SolutionWithJacobian};
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct MonoKey {
    h: Vec<u32>,
    ex: i64,
    ey: i64,
}

/// Polynomial in `H_1..H_n` (nonnegative exponents) and Laurent in `x, y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    num_h: usize,
    terms: BTreeMap<MonoKey, Rational>,
}

impl MultiPoly {
    pub fn zero(num_h: usize) -> Self {
        MultiPoly { num_h, terms: BTreeMap::new() }
    }

    pub fn num_h(&self) -> usize {
        self.num_h
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, h: Vec<u32>, ex: i64, ey: i64, c: Rational) -> Result<()> {
        if h.len() != self.num_h {
            return Err(Error::DimensionMismatch { expected: self.num_h, found: h.len() });
        }
        if Zero::is_zero(&c) {
            return Ok(());
        }
        let key = MonoKey { h, ex, ey };
        let entry = self.terms.entry(key.clone()).or_insert_with(<Rational as Zero>::zero);
        *entry += c;
        if Zero::is_zero(&*entry) {
            self.terms.remove(&key);
        }
        Ok(())
    }

    /// Builder form of [`add_term`](Self::add_term) for literals in tests and examples.
    pub fn with_term(mut self, h: &[u32], ex: i64, ey: i64, c: i64) -> Self {
        self.add_term(h.to_vec(), ex, ey, Rational::from_integer(c.into()))
            .expect("exponent vector matches num_h");
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], i64, i64, &Rational)> + '_ {
        self.terms.iter().map(|(k, c)| (k.h.as_slice(), k.ex, k.ey, c))
    }

    pub fn has_negative_y(&self) -> bool {
        self.terms.keys().any(|k| k.ey < 0)
    }

    pub fn has_negative_x(&self) -> bool {
        self.terms.keys().any(|k| k.ex < 0)
    }

    /// `F(H, x, y)`; dual-capable in every argument.
    pub fn eval<S: Scalar>(&self, h: &[S], x: &S, y: &S) -> Result<S> {
        if h.len() != self.num_h {
            return Err(Error::DimensionMismatch { expected: self.num_h, found: h.len() });
        }
        let mut acc = S::zero();
        for (k, c) in &self.terms {
            let mut t = S::from_rational(c) * x.powi(k.ex)? * y.powi(k.ey)?;
            for (hj, &e) in h.iter().zip(&k.h) {
                if e > 0 {
                    t = t * hj.powi(e as i64)?;
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Largest term magnitude at a float point.
    pub fn max_term_magnitude(&self, h: &[f64], x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let mut t = f64::from_rational(c) * x.powi(k.ex as i32) * y.powi(k.ey as i32);
                for (hj, &e) in h.iter().zip(&k.h) {
                    t *= f64::powi(*hj, e as i32);
                }
                t.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Substitute `H` and `x`, leaving a Laurent polynomial in `y` as `exponent -> coefficient`.
    pub fn restrict_to_y(&self, h: &[f64], x: f64) -> BTreeMap<i64, f64> {
        let mut out = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut t = f64::from_rational(c) * x.powi(k.ex as i32);
            for (hj, &e) in h.iter().zip(&k.h) {
                t *= f64::powi(*hj, e as i32);
            }
            *out.entry(k.ey).or_insert(0.0) += t;
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    h: Vec<u32>,
    ex: i64,
    ey: i64,
    c: String,
}

#[derive(Serialize, Deserialize)]
struct MultiPolyRepr {
    num_h: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for MultiPoly {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        MultiPolyRepr {
            num_h: self.num_h,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| TermRepr { h: k.h.clone(), ex: k.ex, ey: k.ey, c: format_rational(c) })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = MultiPolyRepr::deserialize(d)?;
        let mut p = MultiPoly::zero(repr.num_h);
        for t in repr.terms {
            let c = parse_rational(&t.c).map_err(D::Error::custom)?;
            p.add_term(t.h, t.ex, t.ey, c).map_err(D::Error::custom)?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonlinearSeparationSystem {
    pub n: usize,
    pub residuals: Vec<MultiPoly>,
}

impl NonlinearSeparationSystem {
    pub fn new(residuals: Vec<MultiPoly>) -> Result<Self> {
        let n = residuals.len();
        if n == 0 {
            return Err(Error::invalid("a separation system needs at least one residual"));
        }
        for r in &residuals {
            if r.num_h != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.num_h });
            }
        }
        Ok(NonlinearSeparationSystem { n, residuals })
    }

    /// `F_i = sum_j f_ij(x, y) H_j - f_i0(x, y)`.
    pub fn from_linear(sys: &LinearSeparationSystem) -> Self {
        let n = sys.n;
        let residuals = sys
            .rows
            .iter()
            .map(|row| {
                let mut f = MultiPoly::zero(n);
                for (j, basis) in row.basis.iter().enumerate() {
                    let mut h = vec![0; n];
                    h[j] = 1;
                    for (ex, ey, c) in basis.terms() {
                        f.add_term(h.clone(), ex, ey, c.clone()).expect("length n");
                    }
                }
                for (ex, ey, c) in row.rhs.terms() {
                    f.add_term(vec![0; n], ex, ey, -c.clone()).expect("length n");
                }
                f
            })
            .collect();
        NonlinearSeparationSystem { n, residuals }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            residuals: Vec<MultiPoly>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        let sys = Self::new(raw.residuals)?;
        if sys.n != raw.n {
            return Err(Error::DimensionMismatch { expected: raw.n, found: sys.n });
        }
        Ok(sys)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }

    /// `F_i(H, a_i, b_i)` for every `i`.
    pub fn residual_vector<S: Scalar>(&self, pts: &PointConfiguration<S>, h: &[S]) -> Result<Vec<S>> {
        pts.expect_len(self.n)?;
        self.residuals
            .iter()
            .enumerate()
            .map(|(i, f)| f.eval(h, &pts.a[i], &pts.b[i]))
            .collect()
    }

    /// `dF_i/dH_j` at the given data.
    pub fn h_jacobian<S: Scalar>(&self, pts: &PointConfiguration<S>, h: &[S]) -> Result<Vec<Vec<S>>> {
        Ok(self.partials(pts, h)?.into_iter().map(|p| p.dh).collect())
    }

    fn partials<S: Scalar>(&self, pts: &PointConfiguration<S>, h: &[S]) -> Result<Vec<RowPartials<S>>> {
        pts.expect_len(self.n)?;
        if h.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: h.len() });
        }
        let n = self.n;
        let dim = n + 2;
        let hd: Vec<Dual<S>> = h
            .iter()
            .enumerate()
            .map(|(j, v)| Dual::variable(j, v.clone(), dim))
            .collect::<Result<_>>()?;
        self.residuals
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let x = Dual::variable(n, pts.a[i].clone(), dim)?;
                let y = Dual::variable(n + 1, pts.b[i].clone(), dim)?;
                let g = f.eval(&hd, &x, &y)?.gradient(dim);
                Ok(RowPartials {
                    dh: g[..n].to_vec(),
                    dx: g[n].clone(),
                    dy: g[n + 1].clone(),
                })
            })
            .collect()
    }
}

struct RowPartials<S> {
    dh: Vec<S>,
    dx: S,
    dy: S,
}

/// Convenience: evaluate one residual at `(H, x, y)`.
pub fn residual_eval<S: Scalar>(f: &MultiPoly, h: &[S], x: &S, y: &S) -> Result<S> {
    f.eval(h, x, y)
}

fn scaled_residual(sys: &NonlinearSeparationSystem, pts: &PointConfiguration<f64>, h: &[f64]) -> Result<f64> {
    let r = sys.residual_vector(pts, h)?;
    let mut worst: f64 = 0.0;
    for (i, ri) in r.iter().enumerate() {
        let scale = sys.residuals[i]
            .max_term_magnitude(h, pts.a[i], pts.b[i])
            .max(1.0);
        worst = worst.max(ri.abs() / scale);
    }
    Ok(worst)
}

/// Plain Newton steps until every residual is within `tol` of zero (relative to
/// its largest term, floored at 1).
pub fn newton_solve(
    sys: &NonlinearSeparationSystem,
    pts: &PointConfiguration<f64>,
    guess: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    if guess.len() != sys.n {
        return Err(Error::DimensionMismatch { expected: sys.n, found: guess.len() });
    }
    let mut h = guess.to_vec();
    for _ in 0..max_iter {
        if scaled_residual(sys, pts, &h)? <= tol {
            return Ok(h);
        }
        let j = sys.h_jacobian(pts, &h)?;
        let r = sys.residual_vector(pts, &h)?;
        let step = linalg::solve(j, r).map_err(|pivot| Error::SingularJacobian { pivot })?;
        for (hj, s) in h.iter_mut().zip(step) {
            *hj -= s;
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NewtonDiverged { iterations: max_iter, residual: f64::INFINITY });
        }
    }
    let residual = scaled_residual(sys, pts, &h)?;
    if residual <= tol {
        Ok(h)
    } else {
        Err(Error::NewtonDiverged { iterations: max_iter, residual })
    }
}

/// `dH/d(a, b)` at a solution: column `a_k` solves `J col = -e_k dF_k/da_k`,
/// column `b_k` solves `J col = -e_k dF_k/db_k`, with `J = dF/dH`.
pub fn implicit_jacobian<S: Scalar>(
    sys: &NonlinearSeparationSystem,
    pts: &PointConfiguration<S>,
    h: &[S],
) -> Result<Vec<Vec<S>>> {
    let n = sys.n;
    let parts = sys.partials(pts, h)?;
    let j: Vec<Vec<S>> = parts.iter().map(|p| p.dh.clone()).collect();
    // rhs row i holds -delta_ik dF_k/dxi for all 2n columns
    let rhs: Vec<Vec<S>> = parts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![S::zero(); 2 * n];
            row[i] = -p.dx.clone();
            row[n + i] = -p.dy.clone();
            row
        })
        .collect();
    linalg::solve_multi(j, rhs).map_err(|pivot| Error::SingularJacobian { pivot })
}

/// Newton solve followed by the implicit Jacobian.
pub fn solve_with_jacobian(
    sys: &NonlinearSeparationSystem,
    pts: &PointConfiguration<f64>,
    guess: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolutionWithJacobian<f64>> {
    let h = newton_solve(sys, pts, guess, tol, max_iter)?;
    let jac = implicit_jacobian(sys, pts, &h)?;
    Ok(SolutionWithJacobian { h, jac })
}

/// Rank data of `dF/dH` at `(H, pts)`.
pub fn rank_report<S: Scalar>(
    sys: &NonlinearSeparationSystem,
    pts: &PointConfiguration<S>,
    h: &[S],
) -> Result<RankReport> {
    Ok(RankReport::of_matrix(&sys.h_jacobian(pts, h)?))
}

//! The linear separation system: row `i` reads
//! `sum_j f_ij(a_i, b_i) H_j = f_i0(a_i, b_i)`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::laurent::LaurentPoly2;
use crate::linalg;
use crate::scalar::{JsonScalar, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub basis: Vec<LaurentPoly2>,
    pub rhs: LaurentPoly2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinearSeparationSystem {
    pub n: usize,
    pub rows: Vec<SeparationRow>,
}

impl LinearSeparationSystem {
    pub fn new(rows: Vec<SeparationRow>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("a separation system needs at least one row"));
        }
        for row in &rows {
            if row.basis.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.basis.len() });
            }
        }
        Ok(LinearSeparationSystem { n, rows })
    }

    /// The same basis and right-hand side repeated for each of `n` rows.
    pub fn uniform(basis: Vec<LaurentPoly2>, rhs: LaurentPoly2) -> Result<Self> {
        let n = basis.len();
        Self::new(vec![SeparationRow { basis, rhs }; n])
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            rows: Vec<SeparationRow>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        let sys = Self::new(raw.rows)?;
        if sys.n != raw.n {
            return Err(Error::DimensionMismatch { expected: raw.n, found: sys.n });
        }
        Ok(sys)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }
}

/// Point data `(a_1..a_n, b_1..b_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration<S> {
    pub a: Vec<S>,
    pub b: Vec<S>,
}

impl<S: Scalar> PointConfiguration<S> {
    pub fn new(a: Vec<S>, b: Vec<S>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        Ok(PointConfiguration { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub(crate) fn expect_len(&self, n: usize) -> Result<()> {
        if self.a.len() != n || self.b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.a.len() });
        }
        Ok(())
    }

    /// Coordinates as dual variables in slots `i` (for `a_i`) and `n + i` (for `b_i`).
    pub fn to_dual(&self) -> PointConfiguration<Dual<S>> {
        let n = self.len();
        let seed = |slot: usize, v: &S| Dual::variable(slot, v.clone(), 2 * n).expect("slot < 2n");
        PointConfiguration {
            a: self.a.iter().enumerate().map(|(i, v)| seed(i, v)).collect(),
            b: self.b.iter().enumerate().map(|(i, v)| seed(n + i, v)).collect(),
        }
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> PointConfiguration<T> {
        PointConfiguration {
            a: self.a.iter().map(&f).collect(),
            b: self.b.iter().map(&f).collect(),
        }
    }
}

impl<S: JsonScalar> PointConfiguration<S> {
    pub fn from_json_value(v: &Value) -> Result<Self> {
        let field = |name: &str| -> Result<Vec<S>> {
            v.get(name)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::invalid(format!("points need an array field `{name}`")))?
                .iter()
                .map(S::from_json)
                .collect()
        };
        Self::new(field("a")?, field("b")?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_json_value(&serde_json::from_str(s)?)
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "a": self.a.iter().map(JsonScalar::to_json).collect::<Vec<_>>(),
            "b": self.b.iter().map(JsonScalar::to_json).collect::<Vec<_>>(),
        })
    }
}

/// `H` and the `n x 2n` matrix `jac[j][k]`: `dH_j/da_k` for `k < n`, `dH_j/db_{k-n}` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionWithJacobian<S> {
    pub h: Vec<S>,
    pub jac: Vec<Vec<S>>,
}

impl<S: Scalar> SolutionWithJacobian<S> {
    pub fn n(&self) -> usize {
        self.h.len()
    }

    /// Column `(dH_j/da_k)_j`.
    pub fn a_column(&self, k: usize) -> Vec<S> {
        self.jac.iter().map(|row| row[k].clone()).collect()
    }

    /// Column `(dH_j/db_k)_j`.
    pub fn b_column(&self, k: usize) -> Vec<S> {
        let n = self.n();
        self.jac.iter().map(|row| row[n + k].clone()).collect()
    }

    pub fn from_duals(h: Vec<Dual<S>>) -> Self {
        let dim = 2 * h.len();
        let jac = h.iter().map(|d| d.gradient(dim)).collect();
        SolutionWithJacobian { h: h.into_iter().map(|d| d.value).collect(), jac }
    }
}

impl<S: JsonScalar> SolutionWithJacobian<S> {
    pub fn to_json_value(&self) -> Value {
        let enc = |v: &[S]| v.iter().map(JsonScalar::to_json).collect::<Vec<_>>();
        json!({
            "H": enc(&self.h),
            "jac": self.jac.iter().map(|r| enc(r)).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub full_rank: bool,
    /// Rank of the matrix with row `k` removed.
    pub deleted_row_ranks: Vec<usize>,
}

impl RankReport {
    pub fn of_matrix<S: Scalar>(m: &[Vec<S>]) -> Self {
        let n = m.len();
        let deleted_row_ranks = (0..n)
            .map(|k| {
                let sub: Vec<Vec<S>> = m
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != k)
                    .map(|(_, r)| r.clone())
                    .collect();
                linalg::rank(&sub)
            })
            .collect();
        RankReport { full_rank: linalg::rank(m) == n, deleted_row_ranks }
    }

    /// Whether slot `k` meets the rank condition (rank `n - 1` with row `k` removed).
    pub fn hypothesis_ok(&self, k: usize) -> bool {
        let n = self.deleted_row_ranks.len();
        self.deleted_row_ranks.get(k) == Some(&(n - 1))
    }

    pub fn failing_slots(&self) -> Vec<usize> {
        (0..self.deleted_row_ranks.len())
            .filter(|&k| !self.hypothesis_ok(k))
            .collect()
    }
}

/// Evaluate the system at its point data: `matrix[i][j] = f_ij(a_i, b_i)`, `rhs[i] = f_i0(a_i, b_i)`.
pub fn assemble<S: Scalar>(
    sys: &LinearSeparationSystem,
    pts: &PointConfiguration<S>,
) -> Result<(Vec<Vec<S>>, Vec<S>)> {
    pts.expect_len(sys.n)?;
    let mut matrix = Vec::with_capacity(sys.n);
    let mut rhs = Vec::with_capacity(sys.n);
    for (i, row) in sys.rows.iter().enumerate() {
        let (x, y) = (&pts.a[i], &pts.b[i]);
        matrix.push(
            row.basis
                .iter()
                .map(|f| f.eval(x, y))
                .collect::<Result<Vec<_>>>()?,
        );
        rhs.push(row.rhs.eval(x, y)?);
    }
    Ok((matrix, rhs))
}

/// Infinity-norm condition number of the assembled matrix, in `f64`.
pub fn condition_estimate(sys: &LinearSeparationSystem, pts: &PointConfiguration<f64>) -> Result<f64> {
    let (m, _) = assemble(sys, pts)?;
    Ok(linalg::condition_inf(&m))
}

/// Solve for `H` with the whole assembly and elimination carried out in dual
/// arithmetic, so the Jacobian comes out of the same pass.
pub fn solve<S: Scalar>(
    sys: &LinearSeparationSystem,
    pts: &PointConfiguration<S>,
) -> Result<SolutionWithJacobian<S>> {
    pts.expect_len(sys.n)?;
    let (m, v) = assemble(sys, &pts.to_dual())?;
    let h = linalg::solve(m, v).map_err(|pivot| Error::SingularSystem { pivot })?;
    Ok(SolutionWithJacobian::from_duals(h))
}

pub fn rank_report<S: Scalar>(
    sys: &LinearSeparationSystem,
    pts: &PointConfiguration<S>,
) -> Result<RankReport> {
    let (m, _) = assemble(sys, pts)?;
    Ok(RankReport::of_matrix(&m))
}

/// Largest `|sum_j m_ij H_j - v_i|` relative to the row magnitude.
pub fn relative_residual(sys: &LinearSeparationSystem, pts: &PointConfiguration<f64>, h: &[f64]) -> Result<f64> {
    let (m, v) = assemble(sys, pts)?;
    let mut worst: f64 = 0.0;
    for (row, rhs) in m.iter().zip(&v) {
        let mut acc = -rhs;
        let mut scale = rhs.abs();
        for (mij, hj) in row.iter().zip(h) {
            acc += mij * hj;
            scale = scale.max((mij * hj).abs());
        }
        worst = worst.max(acc.abs() / scale.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

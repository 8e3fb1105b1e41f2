//! Constructors for the standard separation families: Lagrange, sparse and
//! Laurent interpolation, plane curves through points (including the
//! Weierstrass `(n, s)` model), and mixed value/derivative interpolation.

use std::collections::{BTreeMap, BTreeSet};

use num::integer::gcd;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::LaurentPoly2;
use crate::linear::{LinearSeparationSystem, SeparationRow};

/// Combinatorial data of the Weierstrass model `y^w_n = x^w_s + sum_q lambda_q f_q(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeierstrassSpec {
    pub w_n: u32,
    pub w_s: u32,
    /// Distinct positive gap values in ascending order; `H_j` is `lambda_{q_list[j]}`.
    pub q_list: Vec<u32>,
    pub d: usize,
}

/// Family descriptor used by the CLI and the fuzzer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilySpec {
    Lagrange { n: usize },
    Sparse { exponents: Vec<i64> },
    PlaneCurve { monomials: Vec<(u32, u32)>, rhs: LaurentPoly2 },
    Weierstrass { w_n: u32, w_s: u32 },
    Hermite { n: usize, orders: Vec<u32> },
}

impl FamilySpec {
    pub fn build(&self) -> Result<LinearSeparationSystem> {
        match self {
            FamilySpec::Lagrange { n } => lagrange(*n),
            FamilySpec::Sparse { exponents } => sparse_poly(exponents),
            FamilySpec::PlaneCurve { monomials, rhs } => plane_curve(monomials, rhs.clone()),
            FamilySpec::Weierstrass { w_n, w_s } => weierstrass(*w_n, *w_s).map(|(s, _)| s),
            FamilySpec::Hermite { n, orders } => hermite(*n, orders),
        }
    }

    /// Short human-readable label, e.g. `weierstrass(2,3)`.
    pub fn label(&self) -> String {
        let list = |v: &[String]| v.join(",");
        match self {
            FamilySpec::Lagrange { n } => format!("lagrange({n})"),
            FamilySpec::Sparse { exponents } => format!(
                "sparse({})",
                list(&exponents.iter().map(i64::to_string).collect::<Vec<_>>())
            ),
            FamilySpec::PlaneCurve { monomials, rhs } => format!(
                "plane-curve({}; {rhs})",
                list(&monomials.iter().map(|(p, q)| format!("{p}:{q}")).collect::<Vec<_>>())
            ),
            FamilySpec::Weierstrass { w_n, w_s } => format!("weierstrass({w_n},{w_s})"),
            FamilySpec::Hermite { n, orders } => format!(
                "hermite({n};{})",
                list(&orders.iter().map(u32::to_string).collect::<Vec<_>>())
            ),
        }
    }

    /// Whether distinct first coordinates are needed for a nonsingular system.
    pub fn needs_distinct_nodes(&self) -> bool {
        matches!(
            self,
            FamilySpec::Lagrange { .. } | FamilySpec::Sparse { .. } | FamilySpec::Hermite { .. }
        )
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("family size must be positive"));
    }
    Ok(())
}

/// Basis `(1, x, ..., x^{n-1})`, right-hand side `y` in every row.
pub fn lagrange(n: usize) -> Result<LinearSeparationSystem> {
    check_n(n)?;
    sparse_poly(&(0..n as i64).collect::<Vec<_>>())
}

/// Basis `(x^{e_1}, ..., x^{e_n})` with arbitrary integer exponents.
pub fn sparse_poly(exponents: &[i64]) -> Result<LinearSeparationSystem> {
    check_n(exponents.len())?;
    if exponents.iter().collect::<BTreeSet<_>>().len() != exponents.len() {
        return Err(Error::DuplicateExponents);
    }
    let basis = exponents.iter().map(|&e| LaurentPoly2::xy(e, 0)).collect();
    LinearSeparationSystem::uniform(basis, LaurentPoly2::xy(0, 1))
}

/// Curve `sum_j H_j x^{p_j} y^{q_j} = f_0(x, y)` through `n` points.
pub fn plane_curve(monomials: &[(u32, u32)], rhs: LaurentPoly2) -> Result<LinearSeparationSystem> {
    check_n(monomials.len())?;
    if monomials.iter().collect::<BTreeSet<_>>().len() != monomials.len() {
        return Err(Error::DuplicateMonomials);
    }
    let basis = monomials
        .iter()
        .map(|&(p, q)| LaurentPoly2::xy(p as i64, q as i64))
        .collect();
    LinearSeparationSystem::uniform(basis, rhs)
}

/// All `(q, i, j)` with `q = w_n w_s - w_n i - w_s j > 0` and `i, j >= 0`.
pub fn weierstrass_gaps(w_n: u32, w_s: u32) -> Vec<(u32, u32, u32)> {
    let top = (w_n * w_s) as i64;
    let mut out = Vec::new();
    for j in 0..w_n {
        for i in 0..w_s {
            let q = top - (w_n * i) as i64 - (w_s * j) as i64;
            if q > 0 {
                out.push((q as u32, i, j));
            }
        }
    }
    out
}

pub fn weierstrass(w_n: u32, w_s: u32) -> Result<(LinearSeparationSystem, WeierstrassSpec)> {
    if w_n < 2 || w_s < 2 {
        return Err(Error::DegenerateWeierstrass { w_n, w_s });
    }
    if gcd(w_n, w_s) != 1 {
        return Err(Error::NotCoprime { w_n, w_s });
    }
    let mut groups: BTreeMap<u32, LaurentPoly2> = BTreeMap::new();
    for (q, i, j) in weierstrass_gaps(w_n, w_s) {
        let entry = groups.entry(q).or_default();
        *entry = &*entry + &LaurentPoly2::xy(i as i64, j as i64);
    }
    let q_list: Vec<u32> = groups.keys().copied().collect();
    let basis: Vec<LaurentPoly2> = groups.into_values().collect();
    let rhs = &LaurentPoly2::xy(0, w_n as i64) - &LaurentPoly2::xy(w_s as i64, 0);
    let spec = WeierstrassSpec { w_n, w_s, d: q_list.len(), q_list };
    Ok((LinearSeparationSystem::uniform(basis, rhs)?, spec))
}

/// Row `i` prescribes the `orders[i]`-th derivative of a degree `n - 1`
/// polynomial at `a_i` to equal `b_i`.
pub fn hermite(n: usize, orders: &[u32]) -> Result<LinearSeparationSystem> {
    check_n(n)?;
    if orders.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: orders.len() });
    }
    let rows = orders
        .iter()
        .enumerate()
        .map(|(row, &order)| {
            if order as usize > n - 1 {
                return Err(Error::OrderTooHigh { row, order, n });
            }
            let basis = (0..n as i64).map(|e| LaurentPoly2::xy(e, 0).diff_x(order)).collect();
            Ok(SeparationRow { basis, rhs: LaurentPoly2::xy(0, 1) })
        })
        .collect::<Result<Vec<_>>>()?;
    LinearSeparationSystem::new(rows)
}

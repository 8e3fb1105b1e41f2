//! Dense Gaussian elimination over any [`Scalar`].
//!
//! Pivot rule: first nonzero entry for exact scalars, largest magnitude for
//! floating scalars, ties to the lowest row index. A floating pivot counts as
//! zero when its magnitude is at most `PIVOT_REL_TOL` times the largest row
//! scale of the input matrix.

use crate::scalar::Scalar;

pub const PIVOT_REL_TOL: f64 = 1e-12;

/// Largest absolute entry over the whole matrix.
pub fn matrix_scale<S: Scalar>(m: &[Vec<S>]) -> f64 {
    m.iter()
        .flat_map(|row| row.iter().map(Scalar::magnitude))
        .fold(0.0, f64::max)
}

fn negligible<S: Scalar>(x: &S, threshold: f64) -> bool {
    if S::EXACT {
        x.is_zero()
    } else {
        x.is_zero() || x.magnitude() <= threshold || !x.magnitude().is_finite()
    }
}

fn pick_pivot<S: Scalar>(m: &[Vec<S>], col: usize, from: usize, threshold: f64) -> Option<usize> {
    if S::EXACT {
        return (from..m.len()).find(|&r| !m[r][col].is_zero());
    }
    let mut best: Option<(usize, f64)> = None;
    for (r, row) in m.iter().enumerate().skip(from) {
        let mag = row[col].magnitude();
        if best.map_or(true, |(_, b)| mag > b) {
            best = Some((r, mag));
        }
    }
    best.filter(|&(r, _)| !negligible(&m[r][col], threshold))
        .map(|(r, _)| r)
}

/// Solve `m X = rhs` for a square `m` and any number of right-hand columns,
/// given as rows of `rhs` (`rhs[i]` holds row `i` of every column).
///
/// On failure returns the column whose pivot was unusable.
pub fn solve_multi<S: Scalar>(
    mut m: Vec<Vec<S>>,
    mut rhs: Vec<Vec<S>>,
) -> Result<Vec<Vec<S>>, usize> {
    let n = m.len();
    let threshold = PIVOT_REL_TOL * matrix_scale(&m);
    for col in 0..n {
        let p = pick_pivot(&m, col, col, threshold).ok_or(col)?;
        m.swap(col, p);
        rhs.swap(col, p);
        let pivot = m[col][col].clone();
        for r in col + 1..n {
            let factor = m[r][col].checked_div(&pivot).map_err(|_| col)?;
            for c in col..n {
                let t = factor.clone() * m[col][c].clone();
                m[r][c] = m[r][c].clone() - t;
            }
            for c in 0..rhs[r].len() {
                let t = factor.clone() * rhs[col][c].clone();
                rhs[r][c] = rhs[r][c].clone() - t;
            }
        }
    }
    let width = rhs.first().map_or(0, Vec::len);
    let mut x = vec![vec![S::zero(); width]; n];
    for r in (0..n).rev() {
        for c in 0..width {
            let mut acc = rhs[r][c].clone();
            for k in r + 1..n {
                acc = acc - m[r][k].clone() * x[k][c].clone();
            }
            x[r][c] = acc.checked_div(&m[r][r]).map_err(|_| r)?;
        }
    }
    Ok(x)
}

pub fn solve<S: Scalar>(m: Vec<Vec<S>>, rhs: Vec<S>) -> Result<Vec<S>, usize> {
    let cols = rhs.into_iter().map(|v| vec![v]).collect();
    Ok(solve_multi(m, cols)?
        .into_iter()
        .map(|mut row| row.remove(0))
        .collect())
}

/// Infinity-norm condition number `|m| |m^-1|`. Infinite for a singular matrix.
pub fn condition_inf(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let identity = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let Ok(inv) = solve_multi(m.to_vec(), identity) else {
        return f64::INFINITY;
    };
    let norm = |m: &[Vec<f64>]| {
        m.iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    norm(m) * norm(&inv)
}

/// Row rank by elimination, with the threshold taken from this matrix's own scale.
pub fn rank<S: Scalar>(m: &[Vec<S>]) -> usize {
    let mut m: Vec<Vec<S>> = m.to_vec();
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let threshold = PIVOT_REL_TOL * matrix_scale(&m);
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = pick_pivot(&m, col, r, threshold) else {
            continue;
        };
        m.swap(r, p);
        let pivot = m[r][col].clone();
        for i in r + 1..rows {
            if m[i][col].is_zero() {
                continue;
            }
            let Ok(factor) = m[i][col].checked_div(&pivot) else {
                continue;
            };
            for c in col..cols {
                let t = factor.clone() * m[r][c].clone();
                m[i][c] = m[i][c].clone() - t;
            }
        }
        r += 1;
    }
    r
}

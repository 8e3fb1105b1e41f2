//! Level sets of the Hamiltonian map. With `H` held fixed, the pre-image is a
//! product of plane curves `F_i(H, x, y) = 0`, one per separation slot; this
//! module samples one such curve on a rectangular window.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinear::NonlinearSeparationSystem;
use crate::par;

pub const SUBDIVISIONS: usize = 64;
pub const REFINE_REL_TOL: f64 = 1e-10;
pub const RESIDUAL_REL_BOUND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let w = Window { x_min, x_max, y_min, y_max };
        if !(x_min < x_max && y_min < y_max) || [x_min, x_max, y_min, y_max].iter().any(|v| !v.is_finite()) {
            return Err(Error::EmptyWindow);
        }
        Ok(w)
    }

    /// Parse `"xmin,xmax,ymin,ymax"`.
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::invalid(format!("bad window `{s}`")))?;
        match v.as_slice() {
            [a, b, c, d] => Self::new(*a, *b, *c, *d),
            _ => Err(Error::invalid(format!("window needs four numbers, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub x: f64,
    pub y: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberCurveSample {
    /// Separation slot, 0-based.
    pub index: usize,
    pub points: Vec<FiberPoint>,
    pub window: Window,
    pub residual_bound: f64,
    /// Columns skipped because the residual has a pole inside the window.
    pub skipped_columns: usize,
}

impl FiberCurveSample {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slot,x,y,residual\n");
        for p in &self.points {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", self.index + 1, p.x, p.y, p.residual));
        }
        out
    }
}

fn eval_y(poly: &BTreeMap<i64, f64>, y: f64) -> f64 {
    poly.iter().map(|(&e, &c)| c * y.powi(e as i32)).sum()
}

fn max_term_y(poly: &BTreeMap<i64, f64>, y: f64) -> f64 {
    poly.iter().map(|(&e, &c)| (c * y.powi(e as i32)).abs()).fold(0.0, f64::max)
}

struct Column {
    roots: Vec<f64>,
    term_scale: f64,
    skipped: bool,
}

fn column_roots(poly: &BTreeMap<i64, f64>, w: &Window) -> Column {
    let pole_inside = poly.keys().any(|&e| e < 0) && w.y_min <= 0.0 && w.y_max >= 0.0;
    if pole_inside {
        return Column { roots: Vec::new(), term_scale: 0.0, skipped: true };
    }
    let dy = (w.y_max - w.y_min) / SUBDIVISIONS as f64;
    let ys: Vec<f64> = (0..=SUBDIVISIONS).map(|k| w.y_min + dy * k as f64).collect();
    let vals: Vec<f64> = ys.iter().map(|&y| eval_y(poly, y)).collect();
    let term_scale = ys.iter().map(|&y| max_term_y(poly, y)).fold(0.0, f64::max);
    let refine_tol = (w.y_max - w.y_min) * REFINE_REL_TOL;

    let mut roots = Vec::new();
    for k in 0..=SUBDIVISIONS {
        if vals[k] == 0.0 {
            roots.push(ys[k]);
            continue;
        }
        if k == SUBDIVISIONS || vals[k + 1] == 0.0 || (vals[k] > 0.0) == (vals[k + 1] > 0.0) {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (ys[k], ys[k + 1], vals[k]);
        while hi - lo > refine_tol {
            let mid = 0.5 * (lo + hi);
            let fm = eval_y(poly, mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    Column { roots, term_scale, skipped: false }
}

/// Sample `F_slot(H, x, y) = 0` on `resolution` evenly spaced x-columns.
///
/// Even-multiplicity roots that never change sign are missed unless they fall
/// on a sub-grid node.
pub fn sample_fiber(
    sys: &NonlinearSeparationSystem,
    h: &[f64],
    slot: usize,
    window: Window,
    resolution: usize,
) -> Result<FiberCurveSample> {
    let window = Window::new(window.x_min, window.x_max, window.y_min, window.y_max)?;
    if resolution < 2 {
        return Err(Error::invalid("resolution must be at least 2"));
    }
    if slot >= sys.n {
        return Err(Error::SlotOutOfRange { slot, dim: sys.n });
    }
    if h.len() != sys.n {
        return Err(Error::DimensionMismatch { expected: sys.n, found: h.len() });
    }
    let f = &sys.residuals[slot];
    let dx = (window.x_max - window.x_min) / (resolution - 1) as f64;
    let xs: Vec<f64> = (0..resolution).map(|k| window.x_min + dx * k as f64).collect();
    let neg_x = f.has_negative_x();
    let columns = par::map_slice(&xs, |&x| {
        if neg_x && x == 0.0 {
            return Column { roots: Vec::new(), term_scale: 0.0, skipped: true };
        }
        column_roots(&f.restrict_to_y(h, x), &window)
    });

    let term_scale = columns.iter().map(|c| c.term_scale).fold(0.0, f64::max);
    let residual_bound = RESIDUAL_REL_BOUND * term_scale.max(f64::MIN_POSITIVE);
    let mut points = Vec::new();
    let mut skipped_columns = 0;
    for (x, col) in xs.iter().zip(columns) {
        if col.skipped {
            skipped_columns += 1;
            continue;
        }
        for y in col.roots {
            let residual = f.eval(h, x, &y)?.abs();
            points.push(FiberPoint { x: *x, y, residual });
        }
    }
    Ok(FiberCurveSample { index: slot, points, window, residual_bound, skipped_columns })
}

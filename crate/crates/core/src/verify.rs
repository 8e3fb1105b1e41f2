//! Verification surface: gradient relations per separation slot, commutation
//! of the Hamiltonians under a given bracket, and seeded fuzzing across families.
//!
//! In rational mode every check is an exact zero test. Sampling many random
//! rational configurations makes this a probabilistic identity check for the
//! underlying rational functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::laurent::LaurentPoly2;
use crate::linear::{self, LinearSeparationSystem, PointConfiguration, RankReport, SolutionWithJacobian};
use crate::par;
use crate::poisson::{bracket_matrix, PoissonStructure};
use crate::scalar::{max_by_magnitude, JsonScalar, Mode, Rational, Scalar};

/// Gradient relations at slot `k` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Report<S> {
    pub k: usize,
    pub hypothesis_ok: bool,
    pub b_column_nonzero: bool,
    /// `dH_j/da_k = M_k dH_j/db_k` for all `j`.
    pub m_k: Option<S>,
    pub pivot_j_k: Option<usize>,
    /// `A_j` with `dH_j/d. = A_j dH_{j_k}/d.` for both derivatives; `A_{j_k} = 1`.
    pub a_ratios: Option<Vec<S>>,
    /// Worst violation of either relation.
    pub max_residual: S,
    /// Worst `2x2` minor `|a_i b_j - a_j b_i|` of the stacked columns.
    pub minor_residual: S,
    /// Worst disagreement between ratios taken from the a-column and the b-column.
    pub ratio_mismatch: Option<S>,
    pub pass: bool,
}

impl<S: JsonScalar> Prop1Report<S> {
    pub fn to_json_value(&self) -> Value {
        json!({
            "k": self.k + 1,
            "hypothesis_ok": self.hypothesis_ok,
            "b_column_nonzero": self.b_column_nonzero,
            "M_k": self.m_k.as_ref().map(JsonScalar::to_json),
            "pivot_j_k": self.pivot_j_k.map(|j| j + 1),
            "A_ratios": self.a_ratios.as_ref().map(|v| v.iter().map(JsonScalar::to_json).collect::<Vec<_>>()),
            "max_residual": self.max_residual.to_json(),
            "minor_residual": self.minor_residual.to_json(),
            "ratio_mismatch": self.ratio_mismatch.as_ref().map(JsonScalar::to_json),
            "pass": self.pass,
        })
    }
}

/// Index of the largest magnitude, lowest index on ties.
fn argmax_magnitude<S: Scalar>(v: &[S]) -> Option<usize> {
    let mut best: Option<(usize, S)> = None;
    for (j, x) in v.iter().enumerate() {
        let ax = x.abs();
        if best.as_ref().map_or(true, |(_, b)| ax > *b) {
            best = Some((j, ax));
        }
    }
    best.map(|(j, _)| j)
}

fn all_within<S: Scalar>(v: &[S], tol: f64) -> bool {
    v.iter().all(|x| x.within_tol(tol))
}

fn ratios<S: Scalar>(col: &[S], p: usize) -> Result<Vec<S>> {
    let pivot = col[p].clone();
    col.iter()
        .enumerate()
        .map(|(j, x)| if j == p { Ok(S::one()) } else { x.checked_div(&pivot) })
        .collect()
}

pub fn check_prop1<S: Scalar>(
    sol: &SolutionWithJacobian<S>,
    rank: &RankReport,
    k: usize,
    tol: f64,
) -> Result<Prop1Report<S>> {
    let n = sol.n();
    if k >= n {
        return Err(Error::SlotOutOfRange { slot: k, dim: n });
    }
    let a = sol.a_column(k);
    let b = sol.b_column(k);
    let a_nonzero = !all_within(&a, tol);
    let b_column_nonzero = !all_within(&b, tol);

    let mut residuals = Vec::new();

    let m_k = if b_column_nonzero {
        let jb = argmax_magnitude(&b).expect("n >= 1");
        let m = a[jb].checked_div(&b[jb])?;
        residuals.extend(a.iter().zip(&b).map(|(x, y)| x.clone() - m.clone() * y.clone()));
        Some(m)
    } else {
        None
    };

    let (pivot_j_k, a_ratios) = if a_nonzero {
        let p = argmax_magnitude(&a).expect("n >= 1");
        (Some(p), Some(ratios(&a, p)?))
    } else if b_column_nonzero {
        let p = argmax_magnitude(&b).expect("n >= 1");
        (Some(p), Some(ratios(&b, p)?))
    } else {
        (None, None)
    };

    if let (Some(p), Some(r)) = (pivot_j_k, &a_ratios) {
        for j in 0..n {
            residuals.push(a[j].clone() - r[j].clone() * a[p].clone());
            residuals.push(b[j].clone() - r[j].clone() * b[p].clone());
        }
    }

    let ratio_mismatch = match (pivot_j_k, &a_ratios) {
        (Some(p), Some(r)) if a_nonzero && !b[p].within_tol(tol) => {
            let rb = ratios(&b, p)?;
            Some(max_by_magnitude(r.iter().zip(&rb).map(|(x, y)| x.clone() - y.clone())))
        }
        _ => None,
    };

    let mut minors = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            minors.push(a[i].clone() * b[j].clone() - a[j].clone() * b[i].clone());
        }
    }

    let max_residual = max_by_magnitude(residuals);
    let minor_residual = max_by_magnitude(minors);
    let hypothesis_ok = rank.hypothesis_ok(k);
    let pass = !hypothesis_ok
        || (max_residual.within_tol(tol)
            && minor_residual.within_tol(tol)
            && (!S::EXACT || ratio_mismatch.as_ref().map_or(true, |m| m.is_zero())));
    Ok(Prop1Report {
        k,
        hypothesis_ok,
        b_column_nonzero,
        m_k,
        pivot_j_k,
        a_ratios,
        max_residual,
        minor_residual,
        ratio_mismatch,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutationReport<S> {
    pub max_abs_bracket: S,
    pub pairs_checked: usize,
    pub structure_id: String,
    pub mode: Mode,
    pub pass: bool,
}

impl<S: JsonScalar> CommutationReport<S> {
    pub fn to_json_value(&self) -> Value {
        json!({
            "max_abs_bracket": self.max_abs_bracket.to_json(),
            "pairs_checked": self.pairs_checked,
            "structure_id": self.structure_id,
            "mode": self.mode,
            "pass": self.pass,
        })
    }
}

/// Refuse structures that put weight on a slot failing the rank condition.
pub fn check_hypothesis_gate<S: Scalar>(
    ps: &PoissonStructure,
    pts: &PointConfiguration<S>,
    rank: &RankReport,
) -> Result<()> {
    let weights = ps.eval_weights(pts)?;
    for k in rank.failing_slots() {
        if !weights[k].is_zero() {
            return Err(Error::HypothesisViolated { slot: k });
        }
    }
    Ok(())
}

pub fn check_commutation<S: JsonScalar>(
    sol: &SolutionWithJacobian<S>,
    ps: &PoissonStructure,
    pts: &PointConfiguration<S>,
    rank: &RankReport,
    tol: f64,
) -> Result<CommutationReport<S>> {
    check_hypothesis_gate(ps, pts, rank)?;
    let m = bracket_matrix(sol, ps, pts)?;
    let n = sol.n();
    let max_abs_bracket = max_by_magnitude(
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m[i][j].clone()),
    );
    let pass = max_abs_bracket.within_tol(tol);
    Ok(CommutationReport {
        max_abs_bracket,
        pairs_checked: n * (n - 1) / 2,
        structure_id: ps.descriptor(),
        mode: S::MODE,
        pass,
    })
}

/// Aggregate of a fuzzing run. Scalar fields are JSON-encoded per mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzReport {
    pub family: String,
    pub mode: Mode,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub total_draws: usize,
    pub singular_draws: usize,
    pub commutation_checks: usize,
    pub prop1_checks: usize,
    pub failures: usize,
    pub worst_bracket: Value,
    pub worst_prop1_residual: Value,
    pub worst_minor: Value,
    pub worst_ratio_mismatch: Value,
    pub all_pass: bool,
}

struct TrialOutcome<S> {
    draws: usize,
    singular: usize,
    commutation_checks: usize,
    prop1_checks: usize,
    failures: usize,
    worst_bracket: S,
    worst_prop1: S,
    worst_minor: S,
    worst_ratio: S,
}

const MAX_DRAWS_PER_TRIAL: usize = 200;

pub fn random_rational<R: Rng>(rng: &mut R) -> Rational {
    Rational::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=9).into())
}

fn random_nonzero_rational<R: Rng>(rng: &mut R) -> Rational {
    loop {
        let r = random_rational(rng);
        if !num::Zero::is_zero(&r) {
            return r;
        }
    }
}

/// Point data with numerators in `[-9, 9]` and denominators in `[1, 9]`.
pub fn random_points<R: Rng>(rng: &mut R, n: usize) -> PointConfiguration<Rational> {
    let a = (0..n).map(|_| random_rational(rng)).collect();
    let b = (0..n).map(|_| random_rational(rng)).collect();
    PointConfiguration { a, b }
}

/// A weight of one to three terms with exponents in `[min_exp, 2]`.
pub fn random_weight<R: Rng>(rng: &mut R, min_exp: i64) -> LaurentPoly2 {
    let terms = rng.gen_range(1..=3);
    LaurentPoly2::from_terms((0..terms).map(|_| {
        (
            rng.gen_range(min_exp..=2),
            rng.gen_range(min_exp..=2),
            random_nonzero_rational(rng),
        )
    }))
}

/// Random Laurent weights that evaluate at `pts`; falls back to polynomial
/// weights when a coordinate is zero.
pub fn random_structure<R: Rng, S: Scalar>(rng: &mut R, pts: &PointConfiguration<S>) -> PoissonStructure {
    let n = pts.len();
    let ps = PoissonStructure { weights: (0..n).map(|_| random_weight(rng, -1)).collect() };
    if ps.eval_weights(pts).is_ok() {
        return ps;
    }
    PoissonStructure { weights: (0..n).map(|_| random_weight(rng, 0)).collect() }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_trial<S: JsonScalar>(
    sys: &LinearSeparationSystem,
    seed: u64,
    trial: usize,
    tol: f64,
) -> Result<TrialOutcome<S>> {
    let mut rng = trial_rng(seed, trial);
    let n = sys.n;
    let mut draws = 0;
    let (pts, sol) = loop {
        if draws == MAX_DRAWS_PER_TRIAL {
            return Err(Error::TooManySingularSamples { singular: draws, total: draws });
        }
        draws += 1;
        let pts: PointConfiguration<S> = random_points(&mut rng, n).map(S::from_rational);
        match linear::solve(sys, &pts) {
            Ok(sol) => break (pts, sol),
            Err(Error::SingularSystem { .. } | Error::NegativePowerOfZero | Error::DivisionByZero) => continue,
            Err(e) => return Err(e),
        }
    };
    let rank = linear::rank_report(sys, &pts)?;

    let mut structures = vec![PoissonStructure::canonical(n)];
    for k in 0..n {
        structures.push(PoissonStructure::slot(n, k)?);
    }
    structures.push(random_structure(&mut rng, &pts));

    let mut out = TrialOutcome {
        draws,
        singular: draws - 1,
        commutation_checks: 0,
        prop1_checks: 0,
        failures: 0,
        worst_bracket: S::zero(),
        worst_prop1: S::zero(),
        worst_minor: S::zero(),
        worst_ratio: S::zero(),
    };
    for ps in &structures {
        // slots failing the rank condition are skipped, not counted as failures
        match check_commutation(&sol, ps, &pts, &rank, tol) {
            Ok(rep) => {
                out.commutation_checks += 1;
                if !rep.pass {
                    out.failures += 1;
                }
                out.worst_bracket = max_by_magnitude([out.worst_bracket.clone(), rep.max_abs_bracket]);
            }
            Err(Error::HypothesisViolated { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    for k in (0..n).filter(|&k| rank.hypothesis_ok(k)) {
        let rep = check_prop1(&sol, &rank, k, tol)?;
        out.prop1_checks += 1;
        if !rep.pass {
            out.failures += 1;
        }
        out.worst_prop1 = max_by_magnitude([out.worst_prop1.clone(), rep.max_residual]);
        out.worst_minor = max_by_magnitude([out.worst_minor.clone(), rep.minor_residual]);
        if let Some(m) = rep.ratio_mismatch {
            out.worst_ratio = max_by_magnitude([out.worst_ratio.clone(), m]);
        }
    }
    Ok(out)
}

fn fuzz_in<S: JsonScalar>(spec: &FamilySpec, trials: usize, seed: u64, tol: f64) -> Result<FuzzReport> {
    let sys = spec.build()?;
    let outcomes = par::map_indexed(trials, |t| run_trial::<S>(&sys, seed, t, tol));
    let mut report = FuzzReport {
        family: spec.label(),
        mode: S::MODE,
        trials,
        seed,
        tol,
        total_draws: 0,
        singular_draws: 0,
        commutation_checks: 0,
        prop1_checks: 0,
        failures: 0,
        worst_bracket: Value::Null,
        worst_prop1_residual: Value::Null,
        worst_minor: Value::Null,
        worst_ratio_mismatch: Value::Null,
        all_pass: false,
    };
    let (mut wb, mut wp, mut wm, mut wr) = (S::zero(), S::zero(), S::zero(), S::zero());
    for o in outcomes {
        let o = match o {
            Ok(o) => o,
            Err(Error::TooManySingularSamples { .. }) => {
                report.total_draws += MAX_DRAWS_PER_TRIAL;
                report.singular_draws += MAX_DRAWS_PER_TRIAL;
                continue;
            }
            Err(e) => return Err(e),
        };
        report.total_draws += o.draws;
        report.singular_draws += o.singular;
        report.commutation_checks += o.commutation_checks;
        report.prop1_checks += o.prop1_checks;
        report.failures += o.failures;
        wb = max_by_magnitude([wb, o.worst_bracket]);
        wp = max_by_magnitude([wp, o.worst_prop1]);
        wm = max_by_magnitude([wm, o.worst_minor]);
        wr = max_by_magnitude([wr, o.worst_ratio]);
    }
    if report.singular_draws * 10 > report.total_draws * 9 {
        return Err(Error::TooManySingularSamples {
            singular: report.singular_draws,
            total: report.total_draws,
        });
    }
    report.worst_bracket = wb.to_json();
    report.worst_prop1_residual = wp.to_json();
    report.worst_minor = wm.to_json();
    report.worst_ratio_mismatch = wr.to_json();
    report.all_pass = report.failures == 0;
    Ok(report)
}

/// Seeded randomized verification of a family. Deterministic for a given seed
/// regardless of thread count: each trial draws from its own stream.
pub fn fuzz(spec: &FamilySpec, trials: usize, seed: u64, mode: Mode, tol: f64) -> Result<FuzzReport> {
    if trials == 0 {
        return Err(Error::invalid("fuzz needs at least one trial"));
    }
    match mode {
        Mode::Rational => fuzz_in::<Rational>(spec, trials, seed, tol),
        Mode::Float64 => fuzz_in::<f64>(spec, trials, seed, tol),
    }
}

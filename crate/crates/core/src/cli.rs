//! Command-line surface. `run` returns the process exit code:
//! 0 pass, 1 verification failed, 2 input or usage error, 3 numeric failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::fiber::{sample_fiber, Window};
use crate::laurent::{poly_from_json, LaurentPoly2};
use crate::linear::{self, LinearSeparationSystem, PointConfiguration, RankReport, SolutionWithJacobian};
use crate::nonlinear::{self, NonlinearSeparationSystem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::par;
use crate::poisson::PoissonStructure;
use crate::scalar::{JsonScalar, Mode, Rational};
use crate::verify::{self, check_commutation, check_hypothesis_gate, check_prop1};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const THREADS_ENV: &str = "SEPVAR_THREADS";

const FAMILY_HELP: &str = "\
Family parameter blocks:
  lagrange      --n N
  sparse        --exponents E1,E2,...        (distinct integers, negatives allowed)
  plane-curve   --monomials P1:Q1,P2:Q2,...  --rhs '<LaurentPoly2 JSON>'
  weierstrass   --w-n N --w-s S              (coprime, both >= 2)
  hermite       --n N --orders O1,O2,...     (each order <= N-1)
Any family may instead take --params '<JSON>' with the same field names,
e.g. --params '{\"w_n\":2,\"w_s\":3}'.";

#[derive(Debug, Parser)]
#[command(name = "sepvar", version, about = "Commuting Hamiltonians from separation relations", after_help = FAMILY_HELP)]
struct Cli {
    /// Arithmetic mode
    #[arg(long, global = true, value_enum, default_value = "float64")]
    mode: ModeArg,
    /// Tolerance for float-mode checks (rational checks are exact)
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Float64,
    Rational,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Float64 => Mode::Float64,
            ModeArg::Rational => Mode::Rational,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a family's separation system and write it as JSON
    Family {
        name: String,
        #[command(flatten)]
        params: FamilyParams,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a system at point data and report H with its Jacobian
    Solve {
        #[arg(long)]
        sys: PathBuf,
        #[arg(long)]
        points: PathBuf,
        /// Initial guess for nonlinear systems (JSON array)
        #[arg(long)]
        guess: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check commutation and the gradient relations at point data
    Verify {
        #[arg(long)]
        sys: PathBuf,
        #[arg(long)]
        points: PathBuf,
        /// canonical | slot:k | path to a structure JSON file
        #[arg(long, default_value = "canonical")]
        structure: String,
        #[arg(long)]
        guess: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized verification of a family over seeded rational point data
    Fuzz {
        #[arg(long)]
        family: String,
        #[command(flatten)]
        params: FamilyParams,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample one factor curve of a level set of the Hamiltonian map
    Fiber {
        #[arg(long)]
        sys: PathBuf,
        /// Hamiltonian values (JSON array of numbers)
        #[arg(long = "H")]
        h: PathBuf,
        /// Separation slot, 1-based
        #[arg(long)]
        slot: usize,
        /// xmin,xmax,ymin,ymax
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        #[arg(long, default_value_t = 64)]
        res: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: FiberFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FiberFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
struct FamilyParams {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    exponents: Option<Vec<i64>>,
    #[arg(long)]
    monomials: Option<String>,
    /// Right-hand side polynomial as JSON (inline or a file path)
    #[arg(long)]
    rhs: Option<String>,
    #[arg(long = "w-n")]
    w_n: Option<u32>,
    #[arg(long = "w-s")]
    w_s: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<u32>>,
    /// Parameter block as JSON (inline or a file path)
    #[arg(long)]
    params: Option<String>,
}

fn missing(name: &str, flag: &str) -> Error {
    Error::invalid(format!("family `{name}` needs --{flag}"))
}

fn inline_or_file(s: &str) -> Result<String> {
    let t = s.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(s.to_string());
    }
    fs::read_to_string(s).map_err(|e| Error::invalid(format!("cannot read `{s}`: {e}")))
}

fn parse_monomials(s: &str) -> Result<Vec<(u32, u32)>> {
    s.split(',')
        .map(|pair| {
            let (p, q) = pair
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("monomial `{pair}` is not P:Q")))?;
            let p = p.trim().parse().map_err(|_| Error::invalid(format!("bad exponent in `{pair}`")))?;
            let q = q.trim().parse().map_err(|_| Error::invalid(format!("bad exponent in `{pair}`")))?;
            Ok((p, q))
        })
        .collect()
}

fn family_spec(name: &str, p: &FamilyParams) -> Result<FamilySpec> {
    if let Some(raw) = &p.params {
        let mut v: Value = serde_json::from_str(&inline_or_file(raw)?)?;
        let obj = v
            .as_object_mut()
            .ok_or_else(|| Error::invalid("--params must be a JSON object"))?;
        obj.insert("family".into(), Value::String(name.to_string()));
        return serde_json::from_value(v).map_err(|e| Error::invalid(format!("bad parameters for `{name}`: {e}")));
    }
    Ok(match name {
        "lagrange" => FamilySpec::Lagrange { n: p.n.ok_or_else(|| missing(name, "n"))? },
        "sparse" => FamilySpec::Sparse {
            exponents: p.exponents.clone().ok_or_else(|| missing(name, "exponents"))?,
        },
        "plane-curve" => FamilySpec::PlaneCurve {
            monomials: parse_monomials(p.monomials.as_deref().ok_or_else(|| missing(name, "monomials"))?)?,
            rhs: match &p.rhs {
                Some(r) => poly_from_json(&inline_or_file(r)?)?,
                None => LaurentPoly2::xy(0, 1),
            },
        },
        "weierstrass" => FamilySpec::Weierstrass {
            w_n: p.w_n.ok_or_else(|| missing(name, "w-n"))?,
            w_s: p.w_s.ok_or_else(|| missing(name, "w-s"))?,
        },
        "hermite" => {
            let orders = p.orders.clone().ok_or_else(|| missing(name, "orders"))?;
            FamilySpec::Hermite { n: p.n.unwrap_or(orders.len()), orders }
        }
        other => return Err(Error::invalid(format!("unknown family `{other}`"))),
    })
}

enum AnySystem {
    Linear(LinearSeparationSystem),
    Nonlinear(NonlinearSeparationSystem),
}

impl AnySystem {
    fn parse(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s)?;
        if v.get("residuals").is_some() {
            Ok(AnySystem::Nonlinear(NonlinearSeparationSystem::from_json(s)?))
        } else {
            Ok(AnySystem::Linear(LinearSeparationSystem::from_json(s)?))
        }
    }

    fn n(&self) -> usize {
        match self {
            AnySystem::Linear(s) => s.n,
            AnySystem::Nonlinear(s) => s.n,
        }
    }
}

/// Inputs read so far, hashed into every report.
struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    fn new() -> Self {
        Inputs { hasher: Sha256::new() }
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let s = fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read `{}`: {e}", path.display())))?;
        self.hasher.update((s.len() as u64).to_le_bytes());
        self.hasher.update(s.as_bytes());
        Ok(s)
    }

    fn note(&mut self, s: &str) {
        self.hasher.update((s.len() as u64).to_le_bytes());
        self.hasher.update(s.as_bytes());
    }

    fn digest(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

struct Ctx {
    command: &'static str,
    mode: Mode,
    tol: f64,
    seed: u64,
}

impl Ctx {
    fn config(&self, inputs: Inputs) -> Value {
        json!({
            "command": self.command,
            "mode": self.mode,
            "tol": self.tol,
            "seed": self.seed,
            "input_hash": inputs.digest(),
        })
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::invalid(format!("cannot write `{}`: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    emit(out, &s)
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::HypothesisViolated { .. } => EXIT_FAIL,
        e if e.is_numeric() => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

/// Exit code a library error maps to.
pub fn exit_code(e: &Error) -> i32 {
    exit_for(e)
}

fn read_guess(inputs: &mut Inputs, path: Option<&Path>, n: usize) -> Result<Vec<f64>> {
    match path {
        None => Ok(vec![0.0; n]),
        Some(p) => read_float_vec(&inputs.read(p)?, "H"),
    }
}

fn read_float_vec(s: &str, key: &str) -> Result<Vec<f64>> {
    let v: Value = serde_json::from_str(s)?;
    let arr = match &v {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| Error::invalid(format!("expected an array or an object with `{key}`")))?,
        _ => return Err(Error::invalid("expected a JSON array of numbers")),
    };
    arr.iter().map(f64::from_json).collect()
}

fn solve_report<S: JsonScalar>(sol: &SolutionWithJacobian<S>, rank: &RankReport) -> Value {
    let mut v = sol.to_json_value();
    v["rank"] = json!(rank);
    v
}

fn cmd_solve<S: JsonScalar>(
    ctx: &Ctx,
    sys: &AnySystem,
    pts_text: &str,
    guess: Vec<f64>,
    inputs: Inputs,
    out: Option<&Path>,
) -> Result<i32> {
    let report = match sys {
        AnySystem::Linear(lin) => {
            let pts = PointConfiguration::<S>::from_json(pts_text)?;
            let sol = linear::solve(lin, &pts)?;
            let rank = linear::rank_report(lin, &pts)?;
            solve_report(&sol, &rank)
        }
        AnySystem::Nonlinear(nl) => {
            let pts = PointConfiguration::<f64>::from_json(pts_text)?;
            let sol = nonlinear::solve_with_jacobian(nl, &pts, &guess, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let rank = nonlinear::rank_report(nl, &pts, &sol.h)?;
            solve_report(&sol, &rank)
        }
    };
    let mut report = report;
    report["config"] = ctx.config(inputs);
    emit_json(out, &report)?;
    Ok(EXIT_PASS)
}

fn verification<S: JsonScalar>(
    sol: &SolutionWithJacobian<S>,
    ps: &PoissonStructure,
    pts: &PointConfiguration<S>,
    rank: &RankReport,
    tol: f64,
) -> Result<(Value, bool)> {
    let comm = check_commutation(sol, ps, pts, rank, tol)?;
    let mut pass = comm.pass;
    let mut prop1 = Vec::new();
    for k in 0..sol.n() {
        let rep = check_prop1(sol, rank, k, tol)?;
        pass &= rep.pass;
        prop1.push(rep.to_json_value());
    }
    Ok((
        json!({
            "commutation": comm.to_json_value(),
            "prop1": prop1,
            "rank": rank,
            "H": sol.h.iter().map(JsonScalar::to_json).collect::<Vec<_>>(),
        }),
        pass,
    ))
}

fn hypothesis_report(ctx: &Ctx, inputs: Inputs, ps: &PoissonStructure, rank: &RankReport, slot: usize) -> Value {
    json!({
        "config": ctx.config(inputs),
        "error": "HypothesisViolated",
        "detail": Error::HypothesisViolated { slot: slot + 1 }.to_string(),
        "slot": slot + 1,
        "structure_id": ps.descriptor(),
        "rank": rank,
        "pass": false,
    })
}

fn cmd_verify<S: JsonScalar>(
    ctx: &Ctx,
    sys: &AnySystem,
    pts_text: &str,
    ps: &PoissonStructure,
    guess: Vec<f64>,
    inputs: Inputs,
    out: Option<&Path>,
) -> Result<i32> {
    let outcome = match sys {
        AnySystem::Linear(lin) => {
            let pts = PointConfiguration::<S>::from_json(pts_text)?;
            let rank = linear::rank_report(lin, &pts)?;
            if let Err(Error::HypothesisViolated { slot }) = check_hypothesis_gate(ps, &pts, &rank) {
                emit_json(out, &hypothesis_report(ctx, inputs, ps, &rank, slot))?;
                return Ok(EXIT_FAIL);
            }
            let sol = linear::solve(lin, &pts)?;
            verification(&sol, ps, &pts, &rank, ctx.tol)?
        }
        AnySystem::Nonlinear(nl) => {
            let pts = PointConfiguration::<f64>::from_json(pts_text)?;
            let h = nonlinear::newton_solve(nl, &pts, &guess, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let rank = nonlinear::rank_report(nl, &pts, &h)?;
            if let Err(Error::HypothesisViolated { slot }) = check_hypothesis_gate(ps, &pts, &rank) {
                emit_json(out, &hypothesis_report(ctx, inputs, ps, &rank, slot))?;
                return Ok(EXIT_FAIL);
            }
            let jac = nonlinear::implicit_jacobian(nl, &pts, &h)?;
            verification(&SolutionWithJacobian { h, jac }, ps, &pts, &rank, ctx.tol)?
        }
    };
    let (mut report, pass) = outcome;
    report["config"] = ctx.config(inputs);
    report["pass"] = json!(pass);
    emit_json(out, &report)?;
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

fn dispatch(cli: Cli) -> Result<i32> {
    let mode: Mode = cli.mode.into();
    let mut ctx = Ctx { command: "family", mode, tol: cli.tol, seed: cli.seed };
    let mut inputs = Inputs::new();
    match cli.command {
        Command::Family { name, params, out } => {
            let spec = family_spec(&name, &params)?;
            let sys = spec.build()?;
            let mut text = sys.to_json();
            text.push('\n');
            emit(out.as_deref(), &text)?;
            Ok(EXIT_PASS)
        }
        Command::Solve { sys, points, guess, out } => {
            ctx.command = "solve";
            let sys = AnySystem::parse(&inputs.read(&sys)?)?;
            let pts = inputs.read(&points)?;
            let guess = read_guess(&mut inputs, guess.as_deref(), sys.n())?;
            check_nonlinear_mode(&sys, mode)?;
            match mode {
                Mode::Rational => cmd_solve::<Rational>(&ctx, &sys, &pts, guess, inputs, out.as_deref()),
                Mode::Float64 => cmd_solve::<f64>(&ctx, &sys, &pts, guess, inputs, out.as_deref()),
            }
        }
        Command::Verify { sys, points, structure, guess, out } => {
            ctx.command = "verify";
            let sys = AnySystem::parse(&inputs.read(&sys)?)?;
            let pts = inputs.read(&points)?;
            let guess = read_guess(&mut inputs, guess.as_deref(), sys.n())?;
            check_nonlinear_mode(&sys, mode)?;
            let structure_text = if structure == "canonical" || structure.starts_with("slot:") {
                inputs.note(&structure);
                structure
            } else {
                inputs.read(Path::new(&structure))?
            };
            let ps = PoissonStructure::parse(&structure_text, sys.n())?;
            match mode {
                Mode::Rational => cmd_verify::<Rational>(&ctx, &sys, &pts, &ps, guess, inputs, out.as_deref()),
                Mode::Float64 => cmd_verify::<f64>(&ctx, &sys, &pts, &ps, guess, inputs, out.as_deref()),
            }
        }
        Command::Fuzz { family, params, trials, out } => {
            ctx.command = "fuzz";
            let spec = family_spec(&family, &params)?;
            inputs.note(&serde_json::to_string(&spec)?);
            let report = verify::fuzz(&spec, trials, cli.seed, mode, cli.tol)?;
            let pass = report.all_pass;
            let mut v = serde_json::to_value(&report)?;
            v["config"] = ctx.config(inputs);
            emit_json(out.as_deref(), &v)?;
            Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Fiber { sys, h, slot, window, res, format, out } => {
            ctx.command = "fiber";
            let sys = match AnySystem::parse(&inputs.read(&sys)?)? {
                AnySystem::Linear(l) => NonlinearSeparationSystem::from_linear(&l),
                AnySystem::Nonlinear(nl) => nl,
            };
            let hv = read_float_vec(&inputs.read(&h)?, "H")?;
            if slot == 0 {
                return Err(Error::invalid("slots are numbered from 1"));
            }
            let sample = sample_fiber(&sys, &hv, slot - 1, Window::parse(&window)?, res)?;
            if sample.skipped_columns > 0 {
                eprintln!("warning: skipped {} columns with a pole inside the window", sample.skipped_columns);
            }
            match format {
                FiberFormat::Csv => emit(out.as_deref(), &sample.to_csv())?,
                FiberFormat::Json => {
                    let mut v = serde_json::to_value(&sample)?;
                    v["index"] = json!(slot);
                    v["config"] = ctx.config(inputs);
                    emit_json(out.as_deref(), &v)?
                }
            }
            Ok(EXIT_PASS)
        }
    }
}

fn check_nonlinear_mode(sys: &AnySystem, mode: Mode) -> Result<()> {
    if matches!(sys, AnySystem::Nonlinear(_)) && mode == Mode::Rational {
        return Err(Error::invalid("nonlinear systems are solved in float64 mode only"));
    }
    Ok(())
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match par::with_threads(threads_from_env(), || dispatch(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

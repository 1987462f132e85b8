//! `gibbslab` command-line tool.

mod input;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gibbslab::construct::{build_dual, optimality_witness, reciprocal_moments, verify_gibbs_free, KnotRule};
use gibbslab::framelet::{derive_wavelets, framelet_gibbs_verdict, oep_check, truncated_expansion};
use gibbslab::funcmodel::{bspline, FunctionHandle};
use gibbslab::gibbs::{
    bracket_second_deriv, gibbs_at_point, identity_lhs, identity_rhs, nonneg_sufficient, overshoot,
    overshoot_curve, parse_point, GibbsOptions,
};
use gibbslab::quasiproj::{accuracy_order, apply, check_qp1, kernel_criterion, Grid, QuasiProjectionPair, Signal};
use gibbslab::{catalog, GibbsError};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] GibbsError),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) if e.is_precondition() => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "gibbslab", version, about = "Gibbs overshoot analysis of quasi-projection operators and framelet expansions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PairArgs {
    /// Built-in pair (`haar`, `bspline:m`, `daubechies:k`, `dual:bspline:m`) or pair JSON file.
    #[arg(long)]
    pair: Option<String>,
    /// Built-in function or function JSON file.
    #[arg(long)]
    phi: Option<String>,
    /// Dual function; defaults to `--phi`.
    #[arg(long = "phi-tilde")]
    phi_tilde: Option<String>,
}

#[derive(Args)]
struct LevelArg {
    /// Dyadic grid level (at most 16).
    #[arg(long, default_value_t = 12)]
    level: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Summary of a pair: Q1 = 1, accuracy, kernel criterion, identity values, overshoot at 0.
    AnalyzePair {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        level: LevelArg,
        /// Window `lo,hi` for the sampled Q sgn written to --out.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        /// CSV file receiving `x,value` samples of Q sgn.
        #[arg(long)]
        out: Option<String>,
    },
    /// Gibbs verdict at a point `p/q` or `irrational`.
    GibbsPoint {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        level: LevelArg,
        #[arg(long)]
        x0: String,
        /// Decision tolerance.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Sweep density for irrational points.
        #[arg(long, default_value_t = 256)]
        density: usize,
    },
    /// Piecewise-constant dual of a nonnegative scaling function.
    ConstructDual {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        order: usize,
        /// Knot offsets from N, increasing from 0 to 1.
        #[arg(long)]
        knots: Option<String>,
        #[command(flatten)]
        level: LevelArg,
        /// File receiving the dual function JSON.
        #[arg(long)]
        out: Option<String>,
    },
    /// Checks the two filter-bank identities.
    CheckOep {
        /// Built-in bank or bank JSON file.
        bank_file: Option<String>,
        #[arg(long)]
        bank: Option<String>,
    },
    /// Truncated framelet expansion of a test function.
    Expand {
        #[arg(long)]
        bank: String,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long = "phi-tilde")]
        phi_tilde: Option<String>,
        /// `sgn`, `sgn:a`, `clipped-sgn:r`, `monomial:j`, `sine:w`, `gaussian:c,w`.
        #[arg(long, default_value = "sgn")]
        f: String,
        #[arg(long, default_value_t = 4)]
        n: u32,
        #[command(flatten)]
        level: LevelArg,
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// R(t) and L(t) on a uniform grid of [0, 1).
    OvershootCurve {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        level: LevelArg,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// CSV file receiving `t,R,L`.
        #[arg(long)]
        out: Option<String>,
    },
    /// Identity values, overshoot and constructed duals for B-splines of order 1..=order.
    BsplineTable {
        #[arg(long, default_value_t = 6)]
        order: usize,
        #[command(flatten)]
        level: LevelArg,
    },
}

fn write_file(path: &str, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Output {
        path: path.into(),
        source,
    })
}

fn csv_samples(xs: impl Iterator<Item = (f64, f64)>) -> String {
    let mut s = String::from("x,value\n");
    for (x, v) in xs {
        let _ = writeln!(s, "{x},{v}");
    }
    s
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn analyze_pair(pair: &QuasiProjectionPair, level: u32, window: Option<(f64, f64)>, out: Option<&str>) -> Result<Value, CliError> {
    let qp1 = check_qp1(pair);
    let identity = if qp1.ok {
        json!({
            "lhs": identity_lhs(pair, level)?,
            "rhs": to_value(&identity_rhs(pair)?),
        })
    } else {
        Value::Null
    };
    let report = json!({
        "components": pair.components(),
        "support_bound": pair.support_bound(),
        "qp1": to_value(&qp1),
        "accuracy_order": accuracy_order(pair, 6)?,
        "phi_continuous": pair.phi().is_continuous(),
        "kernel": to_value(&kernel_criterion(pair, None, level.min(10))),
        "identity": identity,
        "bracket": to_value(&bracket_second_deriv(pair)?),
        "overshoot_origin": to_value(&overshoot(pair, 0.0, level)?),
        "nonneg": to_value(&nonneg_sufficient(pair, level.min(10))),
    });
    if let Some(path) = out {
        let w = pair.default_half_width(0);
        let (a, b) = window.unwrap_or((-w, w));
        let q = apply(pair, &Signal::sign(), 0, 0.0, &Grid::new(level).with_window(a, b))?;
        write_file(path, &csv_samples((0..q.len()).map(|j| (q.x(j), q.values()[0][j]))))?;
    }
    Ok(report)
}

fn construct_dual(phi: &FunctionHandle, order: usize, knots: KnotRule, level: u32, out: Option<&str>) -> Result<Value, CliError> {
    let dc = build_dual(phi, order, &knots)?;
    let verification = verify_gibbs_free(&dc, phi, level, None)?;
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&dc.phi_tilde).expect("serializable");
        write_file(path, &(text + "\n"))?;
    }
    Ok(json!({
        "construction": to_value(&dc),
        "phi_tilde": to_value(&dc.phi_tilde),
        "verification": to_value(&verification),
        "optimality": to_value(&optimality_witness(&dc)),
    }))
}

#[allow(clippy::too_many_arguments)]
fn expand(
    bank_spec: &str,
    phi: Option<&str>,
    phi_tilde: Option<&str>,
    f: &Signal,
    n: u32,
    level: u32,
    window: Option<(f64, f64)>,
    out: Option<&str>,
) -> Result<Value, CliError> {
    let bank = input::bank(bank_spec)?;
    let phi = match phi {
        Some(p) => input::function(p, level)?,
        None => catalog::bank_function(bank_spec, level)
            .map_err(|_| CliError::Usage("--phi is required for banks read from files".into()))?,
    };
    let phi_tilde = match phi_tilde {
        Some(p) => input::function(p, level)?,
        None => phi.clone(),
    };
    let df = derive_wavelets(&bank, &phi, &phi_tilde)?;
    let pair = df.pair()?;
    let (a, b) = match window {
        Some(w) => w,
        None => {
            let w = pair.default_half_width(n) + 1.0;
            (-w, w)
        }
    };
    let grid = Grid::new(level).with_window(a, b);
    let expansion = truncated_expansion(&df, f, n, &grid)?;
    let q = apply(&pair, f, n, 0.0, &grid)?;
    let values = &expansion.values()[0];
    let deviation = values
        .iter()
        .zip(&q.values()[0])
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    if let Some(path) = out {
        write_file(path, &csv_samples((0..expansion.len()).map(|j| (expansion.x(j), values[j]))))?;
    }
    Ok(json!({
        "n": n,
        "level": level,
        "window": [a, b],
        "points": expansion.len(),
        "min": values.iter().copied().fold(f64::INFINITY, f64::min),
        "max": values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "quasi_projection_deviation": deviation,
        "framelet": to_value(&framelet_gibbs_verdict(&df, level)?),
    }))
}

fn curve(pair: &QuasiProjectionPair, samples: usize, level: u32, out: Option<&str>) -> Result<Value, CliError> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let c = overshoot_curve(pair, samples, level)?;
    if let Some(path) = out {
        let mut s = String::from("t,R,L\n");
        for o in &c {
            let _ = writeln!(s, "{},{},{}", o.t, o.r, o.l);
        }
        write_file(path, &s)?;
    }
    let max_r = c.iter().max_by(|a, b| a.r.total_cmp(&b.r)).expect("nonempty");
    let min_l = c.iter().min_by(|a, b| a.l.total_cmp(&b.l)).expect("nonempty");
    Ok(json!({
        "samples": samples,
        "level": level,
        "max_R": {"t": max_r.t, "value": max_r.r},
        "min_L": {"t": min_l.t, "value": min_l.l},
    }))
}

fn bspline_table(order: usize, level: u32) -> Result<Value, CliError> {
    if !(1..=9).contains(&order) {
        return Err(CliError::Usage(format!("order {order} outside 1..=9")));
    }
    let mut rows = Vec::with_capacity(order);
    for m in 1..=order {
        let phi: FunctionHandle = bspline(m)?.into();
        let pair = QuasiProjectionPair::new(phi.clone(), phi.clone())?;
        let o = overshoot(&pair, 0.0, level)?;
        let dc = build_dual(&phi, m, &KnotRule::Uniform)?;
        let dual = dc.pair(&phi)?;
        let od = overshoot(&dual, 0.0, level)?;
        rows.push(json!({
            "m": m,
            "d": reciprocal_moments(&phi, m)?,
            "identity_rhs": to_value(&identity_rhs(&pair)?),
            "bracket": to_value(&bracket_second_deriv(&pair)?.value),
            "R0": o.r,
            "L0": o.l,
            "dual": {
                "N": dc.n,
                "c": dc.c,
                "accuracy_order": accuracy_order(&dual, 9)?,
                "R0": od.r,
                "L0": od.l,
            },
        }));
    }
    Ok(Value::Array(rows))
}

fn run(cli: Cli) -> Result<Value, CliError> {
    match cli.command {
        Command::AnalyzePair { pair, level, window, out } => {
            let level = input::check_level(level.level)?;
            let window = window.as_deref().map(input::window).transpose()?;
            let p = input::pair(pair.pair.as_deref(), pair.phi.as_deref(), pair.phi_tilde.as_deref(), level)?;
            analyze_pair(&p, level, window, out.as_deref())
        }
        Command::GibbsPoint { pair, level, x0, tol, density } => {
            let level = input::check_level(level.level)?;
            let point = parse_point(&x0)?;
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::Usage(format!("tolerance must be positive, got {tol}")));
            }
            let p = input::pair(pair.pair.as_deref(), pair.phi.as_deref(), pair.phi_tilde.as_deref(), level)?;
            let opts = GibbsOptions { tau: tol, level, density };
            Ok(to_value(&gibbs_at_point(&p, point, &opts)?))
        }
        Command::ConstructDual { phi, order, knots, level, out } => {
            let level = input::check_level(level.level)?;
            let knots = match knots {
                Some(k) => KnotRule::Relative(input::reals(&k)?),
                None => KnotRule::Uniform,
            };
            let phi = input::function(&phi, level)?;
            construct_dual(&phi, order, knots, level, out.as_deref())
        }
        Command::CheckOep { bank_file, bank } => {
            let spec = match (bank_file, bank) {
                (Some(_), Some(_)) => return Err(CliError::Usage("give the bank once".into())),
                (Some(s), None) | (None, Some(s)) => s,
                (None, None) => return Err(CliError::Usage("missing filter bank".into())),
            };
            Ok(to_value(&oep_check(&input::bank(&spec)?)?))
        }
        Command::Expand { bank, phi, phi_tilde, f, n, level, window, out } => {
            let level = input::check_level(level.level)?;
            let f = input::signal(&f)?;
            let window = window.as_deref().map(input::window).transpose()?;
            expand(&bank, phi.as_deref(), phi_tilde.as_deref(), &f, n, level, window, out.as_deref())
        }
        Command::OvershootCurve { pair, level, samples, out } => {
            let level = input::check_level(level.level)?;
            let p = input::pair(pair.pair.as_deref(), pair.phi.as_deref(), pair.phi_tilde.as_deref(), level)?;
            curve(&p, samples, level, out.as_deref())
        }
        Command::BsplineTable { order, level } => bspline_table(order, input::check_level(level.level)?),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GIBBSLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("GIBBSLAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(cli));
    match result {
        Ok(v) => {
            let text = serde_json::to_string_pretty(&v).expect("serializable");
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    eprintln!("error: cannot write output: {e}");
                    ExitCode::from(1)
                }
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

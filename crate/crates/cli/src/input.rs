//! Resolution of command-line specifiers into library objects.

use std::fs;
use std::path::Path;

use gibbslab::catalog;
use gibbslab::framelet::FilterBank;
use gibbslab::funcmodel::{FunctionHandle, FunctionSpec};
use gibbslab::quasiproj::{QuasiProjectionPair, Signal};
use serde::Deserialize;

use crate::CliError;

/// Largest grid or cascade level accepted on the command line.
pub const MAX_LEVEL: u32 = 16;

#[derive(Deserialize)]
struct PairFile {
    phi: FunctionSpec,
    phi_tilde: Option<FunctionSpec>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("cannot parse {path}: {e}")))
}

fn is_file(spec: &str) -> bool {
    spec.ends_with(".json") || Path::new(spec).is_file()
}

pub fn check_level(level: u32) -> Result<u32, CliError> {
    if level > MAX_LEVEL {
        return Err(CliError::Usage(format!("level {level} exceeds {MAX_LEVEL}")));
    }
    Ok(level)
}

/// A built-in function name or a function JSON file.
pub fn function(spec: &str, level: u32) -> Result<FunctionHandle, CliError> {
    if is_file(spec) {
        let f: FunctionSpec = read_json(spec)?;
        return Ok(f.build()?);
    }
    Ok(catalog::function(spec, level)?)
}

/// `--pair`, or `--phi` with an optional `--phi-tilde` (defaulting to `--phi`).
pub fn pair(
    pair: Option<&str>,
    phi: Option<&str>,
    phi_tilde: Option<&str>,
    level: u32,
) -> Result<QuasiProjectionPair, CliError> {
    match (pair, phi) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either --pair or --phi, not both".into())),
        (Some(p), None) if is_file(p) => {
            let file: PairFile = read_json(p)?;
            let phi = file.phi.build()?;
            let phi_tilde = match file.phi_tilde {
                Some(t) => t.build()?,
                None => phi.clone(),
            };
            Ok(QuasiProjectionPair::new(phi, phi_tilde)?)
        }
        (Some(p), None) => Ok(catalog::pair(p, level)?),
        (None, Some(f)) => {
            let phi = function(f, level)?;
            let phi_tilde = match phi_tilde {
                Some(t) => function(t, level)?,
                None => phi.clone(),
            };
            Ok(QuasiProjectionPair::new(phi, phi_tilde)?)
        }
        (None, None) => Err(CliError::Usage("missing --pair or --phi".into())),
    }
}

/// A built-in bank name or a filter-bank JSON file.
pub fn bank(spec: &str) -> Result<FilterBank, CliError> {
    if is_file(spec) {
        return read_json(spec);
    }
    Ok(catalog::bank(spec)?)
}

/// `lo,hi`.
pub fn window(spec: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("malformed window {spec:?}, expected lo,hi"));
    let (a, b) = spec.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(bad());
    }
    Ok((a, b))
}

/// Comma-separated reals.
pub fn reals(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("malformed number {s:?} in {spec:?}")))
        })
        .collect()
}

/// `sgn`, `sgn:at`, `clipped-sgn:r`, `monomial:j`, `sine:w`, `gaussian:c,w`.
pub fn signal(spec: &str) -> Result<Signal, CliError> {
    let bad = || CliError::Usage(format!("unknown test function {spec:?}"));
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let num = |a: Option<&str>| -> Result<f64, CliError> {
        let v = reals(a.ok_or_else(bad)?)?;
        match v.as_slice() {
            [x] => Ok(*x),
            _ => Err(bad()),
        }
    };
    match name {
        "sgn" => Ok(Signal::Sign { at: arg.map(|_| num(arg)).transpose()?.unwrap_or(0.0) }),
        "clipped-sgn" => {
            let radius = num(arg)?;
            if radius <= 0.0 {
                return Err(bad());
            }
            Ok(Signal::ClippedSign { radius })
        }
        "monomial" => {
            let degree = arg.and_then(|a| a.trim().parse().ok()).ok_or_else(bad)?;
            Ok(Signal::Monomial { degree })
        }
        "sine" => Ok(Signal::Sine { frequency: num(arg)? }),
        "gaussian" => match reals(arg.ok_or_else(bad)?)?.as_slice() {
            [center, width] if *width > 0.0 => Ok(Signal::Gaussian { center: *center, width: *width }),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

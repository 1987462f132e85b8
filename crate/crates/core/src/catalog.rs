//! Named functions, pairs and filter banks.
//!
//! Function names: `haar`, `bspline:m`, `daubechies:k`.
//! Pair names additionally accept `dual:bspline:m` (the spline with its
//! constructed piecewise-constant dual of order `m`).
//! Bank names: `haar`, `bspline2-tight`, `daubechies:k`.

use crate::construct::{build_dual, KnotRule};
use crate::error::{GibbsError, Result};
use crate::framelet::FilterBank;
use crate::funcmodel::{bspline, bspline_mask_coeffs, daubechies_mask, FunctionHandle};
use crate::quasiproj::QuasiProjectionPair;
use crate::sequences::MatrixSeq;

fn parse_order(s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| GibbsError::InvalidInput(format!("bad {what} order {s:?}")))
}

/// Built-in scaling function by name; `level` applies to refinable ones.
pub fn function(name: &str, level: u32) -> Result<FunctionHandle> {
    match name.split_once(':') {
        None if name == "haar" => Ok(bspline(1)?.into()),
        Some(("bspline", m)) => Ok(bspline(parse_order(m, "B-spline")?)?.into()),
        Some(("daubechies", k)) => {
            FunctionHandle::refinable(daubechies_mask(parse_order(k, "Daubechies")?)?, vec![1.0], level)
        }
        _ => Err(GibbsError::InvalidInput(format!("unknown function {name:?}"))),
    }
}

/// Built-in pair by name: a function paired with itself, or
/// `dual:bspline:m`.
pub fn pair(name: &str, level: u32) -> Result<QuasiProjectionPair> {
    if let Some(m) = name.strip_prefix("dual:bspline:") {
        let m = parse_order(m, "B-spline")?;
        let phi: FunctionHandle = bspline(m)?.into();
        let dual = build_dual(&phi, m, &KnotRule::Uniform)?;
        return QuasiProjectionPair::new(phi, dual.phi_tilde.into());
    }
    let f = function(name, level)?;
    QuasiProjectionPair::new(f.clone(), f)
}

/// Refinement mask `a(k) = 2^{−m} C(m, k)` of `B_m`.
pub fn bspline_mask(m: usize) -> MatrixSeq {
    MatrixSeq::scalar(0, &bspline_mask_coeffs(m))
}

/// Tight bank for `B₂` with `b̂₁ ∝ (1 − e^{−iξ})²`, `b̂₂ ∝ 1 − e^{−2iξ}`.
pub fn bspline2_tight_bank() -> FilterBank {
    let r = std::f64::consts::SQRT_2 / 4.0;
    let b = MatrixSeq::real(
        0,
        2,
        1,
        &[vec![-0.25, r], vec![0.5, 0.0], vec![-0.25, -r]],
    )
    .expect("static shape");
    FilterBank::tight(bspline_mask(2), b).expect("static shape")
}

/// Wavelet filter `b(n) = (−1)^n a(1 − n)` of an orthonormal scalar mask.
pub fn quadrature_mirror(a: &MatrixSeq) -> MatrixSeq {
    let lo = 1 - a.last_index();
    let hi = 1 - a.offset();
    let coeffs: Vec<f64> = (lo..=hi)
        .map(|n| {
            let s = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            s * a.get(1 - n).get(0, 0).re
        })
        .collect();
    MatrixSeq::scalar(lo, &coeffs)
}

/// Built-in bank by name.
pub fn bank(name: &str) -> Result<FilterBank> {
    match name.split_once(':') {
        None if name == "haar" => daubechies_bank(1),
        None if name == "bspline2-tight" => Ok(bspline2_tight_bank()),
        Some(("daubechies", k)) => daubechies_bank(parse_order(k, "Daubechies")?),
        _ => Err(GibbsError::InvalidInput(format!("unknown filter bank {name:?}"))),
    }
}

/// Orthonormal bank `a = Daubechies mask`, `b` its mirror filter.
pub fn daubechies_bank(k: usize) -> Result<FilterBank> {
    let a = daubechies_mask(k)?;
    let b = quadrature_mirror(&a);
    FilterBank::tight(a, b)
}

/// Refinable functions of a built-in bank (`φ = φ̃`).
pub fn bank_function(name: &str, level: u32) -> Result<FunctionHandle> {
    match name {
        "haar" => function("haar", level),
        "bspline2-tight" => function("bspline:2", level),
        _ => function(name, level),
    }
}

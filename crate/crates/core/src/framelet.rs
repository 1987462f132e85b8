//! Dual framelet filter banks, wavelet generators and truncated framelet
//! expansions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GibbsError, Result};
use crate::funcmodel::FunctionHandle;
use crate::gibbs::{bracket_second_deriv, overshoot, NONNEG_TOL};
use crate::linalg::solve_real;
use crate::quasiproj::{grid_points, level_sum, Analyzer, Grid, QuasiProjectionPair, Signal};
use crate::sequences::{convolve, MatrixSeq};
use crate::funcmodel::SampledFunction;

/// Coefficient deviation accepted by [`oep_check`].
pub const OEP_TOL: f64 = 1e-12;

/// Moment magnitude below which a moment counts as vanishing.
pub const VMO_TOL: f64 = 1e-8;

/// Default highest moment order inspected by [`vanishing_moments`].
pub const VMO_MAX: usize = 6;

/// Largest accepted `sup |φ − 2Σ a(k)φ(2·−k)|`.
pub const REFINEMENT_TOL: f64 = 1e-6;

/// Filters `({ã; b̃}, {a; b})_Θ` with `a, ã, θ, θ̃` of size `r × r` and
/// `b, b̃` of size `s × r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilterBankJson", into = "FilterBankJson")]
pub struct FilterBank {
    a: MatrixSeq,
    a_tilde: MatrixSeq,
    b: MatrixSeq,
    b_tilde: MatrixSeq,
    theta: MatrixSeq,
    theta_tilde: MatrixSeq,
}

#[derive(Serialize, Deserialize)]
struct FilterBankJson {
    a: MatrixSeq,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a_tilde: Option<MatrixSeq>,
    b: MatrixSeq,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b_tilde: Option<MatrixSeq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<MatrixSeq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta_tilde: Option<MatrixSeq>,
}

impl TryFrom<FilterBankJson> for FilterBank {
    type Error = GibbsError;
    fn try_from(j: FilterBankJson) -> Result<Self> {
        let r = j.a.shape().0;
        let bank = FilterBank::new(
            j.a.clone(),
            j.a_tilde.unwrap_or(j.a),
            j.b.clone(),
            j.b_tilde.unwrap_or(j.b),
        )?;
        bank.with_theta(
            j.theta.unwrap_or_else(|| MatrixSeq::dirac(r)),
            j.theta_tilde.unwrap_or_else(|| MatrixSeq::dirac(r)),
        )
    }
}

impl From<FilterBank> for FilterBankJson {
    fn from(f: FilterBank) -> Self {
        let r = f.r();
        let dirac = MatrixSeq::dirac(r);
        FilterBankJson {
            a_tilde: (f.a_tilde != f.a).then(|| f.a_tilde.clone()),
            b_tilde: (f.b_tilde != f.b).then(|| f.b_tilde.clone()),
            theta: (f.theta != dirac).then(|| f.theta.clone()),
            theta_tilde: (f.theta_tilde != dirac).then(|| f.theta_tilde.clone()),
            a: f.a,
            b: f.b,
        }
    }
}

impl FilterBank {
    /// Bank with `θ = θ̃ = δI`.
    pub fn new(a: MatrixSeq, a_tilde: MatrixSeq, b: MatrixSeq, b_tilde: MatrixSeq) -> Result<Self> {
        let r = a.shape().0;
        let bank = FilterBank {
            a,
            a_tilde,
            b,
            b_tilde,
            theta: MatrixSeq::dirac(r),
            theta_tilde: MatrixSeq::dirac(r),
        };
        bank.validate()?;
        Ok(bank)
    }

    /// Tight bank: `ã = a`, `b̃ = b`.
    pub fn tight(a: MatrixSeq, b: MatrixSeq) -> Result<Self> {
        FilterBank::new(a.clone(), a, b.clone(), b)
    }

    pub fn with_theta(self, theta: MatrixSeq, theta_tilde: MatrixSeq) -> Result<Self> {
        let bank = FilterBank {
            theta,
            theta_tilde,
            ..self
        };
        bank.validate()?;
        Ok(bank)
    }

    fn validate(&self) -> Result<()> {
        let r = self.a.shape().0;
        let s = self.b.shape().0;
        let square = [
            ("a", &self.a),
            ("a_tilde", &self.a_tilde),
            ("theta", &self.theta),
            ("theta_tilde", &self.theta_tilde),
        ];
        for (name, f) in square {
            if f.shape() != (r, r) {
                return Err(GibbsError::DimensionMismatch(format!(
                    "{name} has shape {:?}, expected ({r}, {r})",
                    f.shape()
                )));
            }
        }
        for (name, f) in [("b", &self.b), ("b_tilde", &self.b_tilde)] {
            if f.shape() != (s, r) {
                return Err(GibbsError::DimensionMismatch(format!(
                    "{name} has shape {:?}, expected ({s}, {r})",
                    f.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn r(&self) -> usize {
        self.a.shape().0
    }

    pub fn s(&self) -> usize {
        self.b.shape().0
    }

    pub fn a(&self) -> &MatrixSeq {
        &self.a
    }

    pub fn a_tilde(&self) -> &MatrixSeq {
        &self.a_tilde
    }

    pub fn b(&self) -> &MatrixSeq {
        &self.b
    }

    pub fn b_tilde(&self) -> &MatrixSeq {
        &self.b_tilde
    }

    pub fn theta(&self) -> &MatrixSeq {
        &self.theta
    }

    pub fn theta_tilde(&self) -> &MatrixSeq {
        &self.theta_tilde
    }

    /// `Θ` with `Θ̂(ξ) = θ̃̂(ξ)ᵀ conj(θ̂(ξ))`.
    pub fn big_theta(&self) -> Result<MatrixSeq> {
        convolve(&self.theta_tilde.transpose(), &self.theta.conj_reverse())
    }
}

/// Coefficient deviations of the two filter-bank identities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OepReport {
    /// `max |coeff of ã^ᵀΘ(2·)conj(a) + b̃ᵀconj(b) − Θ|`.
    pub residual0: f64,
    /// `max |coeff of ã^ᵀΘ(2·)conj(a(· + π)) + b̃ᵀconj(b(· + π))|`.
    pub residual_pi: f64,
    pub ok: bool,
}

/// Checks both identities exactly in the coefficient domain.
pub fn oep_check(bank: &FilterBank) -> Result<OepReport> {
    let theta = bank.big_theta()?;
    let at = convolve(&bank.a_tilde.transpose(), &theta.upsample())?;
    let bt = bank.b_tilde.transpose();
    let first = convolve(&at, &bank.a.conj_reverse())?
        .add(&convolve(&bt, &bank.b.conj_reverse())?)?
        .sub(&theta)?;
    let second = convolve(&at, &bank.a.modulate().conj_reverse())?
        .add(&convolve(&bt, &bank.b.modulate().conj_reverse())?)?;
    let residual0 = first.max_abs();
    let residual_pi = second.max_abs();
    Ok(OepReport {
        residual0,
        residual_pi,
        ok: residual0 <= OEP_TOL && residual_pi <= OEP_TOL,
    })
}

/// `∫ x^j φ`, `j ≤ j_max`, from the mask recursion
/// `(2^j − â(0)) μ_j = Σ_{i<j} C(j, i) A_{j−i} μ_i`, `A_m = Σ_k a(k) k^m`.
pub fn refinable_moments(mask: &MatrixSeq, normalization: &[f64], j_max: usize) -> Result<Vec<Vec<f64>>> {
    let r = normalization.len();
    if mask.shape() != (r, r) {
        return Err(GibbsError::DimensionMismatch(format!(
            "mask shape {:?} does not match {r} components",
            mask.shape()
        )));
    }
    let taps = mask.real_entries();
    let power_sum = |m: usize| -> Vec<Vec<f64>> {
        let mut acc = vec![vec![0.0; r]; r];
        for (k, e) in &taps {
            let w = (*k as f64).powi(m as i32);
            for (row, er) in acc.iter_mut().zip(e) {
                for (x, v) in row.iter_mut().zip(er) {
                    *x += w * v;
                }
            }
        }
        acc
    };
    let sums: Vec<Vec<Vec<f64>>> = (0..=j_max).map(power_sum).collect();
    let mut mu = vec![normalization.to_vec()];
    for j in 1..=j_max {
        let mut rhs = vec![0.0; r];
        let mut binom = 1.0;
        for i in 0..j {
            // binom = C(j, i)
            let m = &sums[j - i];
            for (o, row) in rhs.iter_mut().zip(m) {
                *o += binom * row.iter().zip(&mu[i]).map(|(a, b)| a * b).sum::<f64>();
            }
            binom = binom * (j - i) as f64 / (i + 1) as f64;
        }
        let p = (j as f64).exp2();
        let lhs: Vec<Vec<f64>> = (0..r)
            .map(|i| {
                (0..r)
                    .map(|c| if i == c { p } else { 0.0 } - sums[0][i][c])
                    .collect()
            })
            .collect();
        mu.push(solve_real(lhs, rhs).ok_or(GibbsError::Singular)?);
    }
    Ok(mu)
}

/// Moments of `φ` through order `j_max`: from the mask for refinable
/// functions, directly otherwise.
pub fn exact_moments(phi: &FunctionHandle, j_max: usize) -> Result<Vec<Vec<f64>>> {
    match phi {
        FunctionHandle::Refinable(rf) => refinable_moments(rf.mask(), rf.normalization(), j_max),
        _ => Ok((0..=j_max).map(|j| phi.moment(j)).collect()),
    }
}

/// Moments of `ψ = 2 Σ_k b(k) φ(2· − k)`:
/// `μ_j(ψ) = 2^{−j} Σ_k b(k) Σ_i C(j, i) k^{j−i} μ_i(φ)`.
pub fn wavelet_moments(b: &MatrixSeq, phi_moments: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let s = b.shape().0;
    let taps = b.real_entries();
    (0..phi_moments.len())
        .map(|j| {
            let mut out = vec![0.0; s];
            for (k, e) in &taps {
                let kf = *k as f64;
                let mut binom = 1.0;
                for i in 0..=j {
                    let w = binom * kf.powi((j - i) as i32);
                    for (o, row) in out.iter_mut().zip(e) {
                        *o += w * row.iter().zip(&phi_moments[i]).map(|(a, b)| a * b).sum::<f64>();
                    }
                    binom = binom * (j - i) as f64 / (i + 1) as f64;
                }
            }
            let scale = (-(j as f64)).exp2();
            out.into_iter().map(|v| v * scale).collect()
        })
        .collect()
}

/// Number of leading vanishing moments, minimized over components;
/// `moments.len()` when every listed moment vanishes.
pub fn vmo_from_moments(moments: &[Vec<f64>]) -> usize {
    moments
        .iter()
        .position(|m| m.iter().any(|v| v.abs() > VMO_TOL))
        .unwrap_or(moments.len())
}

/// Smallest `j ≤ j_max` with a moment of order `j` above [`VMO_TOL`]
/// (`j_max + 1` if none).
pub fn vanishing_moments(psi: &FunctionHandle, j_max: usize) -> usize {
    let moments: Vec<Vec<f64>> = (0..=j_max).map(|j| psi.moment(j)).collect();
    vmo_from_moments(&moments)
}

/// `sup |φ − 2 Σ_k a(k) φ(2· − k)|` at the sample nodes of `φ` (level-8
/// grid for piecewise polynomials).
pub fn refinement_residual(phi: &FunctionHandle, mask: &MatrixSeq) -> Result<f64> {
    let terms: Vec<(i64, Vec<Vec<f64>>)> = mask
        .real_entries()
        .into_iter()
        .map(|(k, m)| (k, m.into_iter().map(|row| row.into_iter().map(|v| 2.0 * v).collect()).collect()))
        .collect();
    let refined = phi.refine_combine(2, &terms)?;
    let (level, origin) = phi.sample_grid().unwrap_or((8, 0.0));
    let (a, b) = phi.support();
    let (lo, hi) = refined.support();
    let h = (-(level as f64)).exp2();
    let (x0, count) = grid_points(h, (a.min(lo), b.max(hi)), origin.rem_euclid(h));
    Ok((0..count)
        .map(|j| {
            let x = x0 + j as f64 * h;
            phi.eval(x)
                .iter()
                .zip(refined.eval(x))
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

/// Refinable functions attached to a filter bank together with the
/// derived generators.
#[derive(Clone, Debug)]
pub struct DualFramelet {
    phi: FunctionHandle,
    phi_tilde: FunctionHandle,
    psi: FunctionHandle,
    psi_tilde: FunctionHandle,
    eta: FunctionHandle,
    eta_tilde: FunctionHandle,
    phi_ring: FunctionHandle,
    phi_tilde_ring: FunctionHandle,
    psi_moments: Vec<Vec<f64>>,
    psi_tilde_moments: Vec<Vec<f64>>,
    bank: FilterBank,
}

fn real_terms(seq: &MatrixSeq) -> Result<Vec<(i64, Vec<Vec<f64>>)>> {
    if seq.max_imag() > 1e-14 {
        return Err(GibbsError::InvalidInput(
            "complex filters cannot act on real functions".into(),
        ));
    }
    Ok(seq.real_entries())
}

fn doubled(terms: Vec<(i64, Vec<Vec<f64>>)>) -> Vec<(i64, Vec<Vec<f64>>)> {
    terms
        .into_iter()
        .map(|(k, m)| (k, m.into_iter().map(|r| r.into_iter().map(|v| 2.0 * v).collect()).collect()))
        .collect()
}

/// Builds `ψ = 2Σ b(k)φ(2·−k)`, `ψ̃`, `η = Σ θ(k)φ(·−k)`, `η̃` and the pair
/// `φ̊ = Σ conj(Θ(−k))φ(·−k)`, `φ̃̊ = Σ Θ(k)ᵀφ̃(·−k)`.
pub fn derive_wavelets(
    bank: &FilterBank,
    phi: &FunctionHandle,
    phi_tilde: &FunctionHandle,
) -> Result<DualFramelet> {
    let r = bank.r();
    if phi.components() != r || phi_tilde.components() != r {
        return Err(GibbsError::DimensionMismatch(format!(
            "bank has r = {r}, functions have {} and {} components",
            phi.components(),
            phi_tilde.components()
        )));
    }
    for (name, f, mask) in [("φ", phi, &bank.a), ("φ̃", phi_tilde, &bank.a_tilde)] {
        let res = refinement_residual(f, mask)?;
        if res > REFINEMENT_TOL {
            return Err(GibbsError::Precondition(format!(
                "{name} is not refinable with its mask (residual {res:.3e})"
            )));
        }
    }
    let psi = phi.refine_combine(2, &doubled(real_terms(&bank.b)?))?;
    let psi_tilde = phi_tilde.refine_combine(2, &doubled(real_terms(&bank.b_tilde)?))?;
    let eta = phi.refine_combine(1, &real_terms(&bank.theta)?)?;
    let eta_tilde = phi_tilde.refine_combine(1, &real_terms(&bank.theta_tilde)?)?;
    let big = bank.big_theta()?;
    let ring_terms: Vec<(i64, Vec<Vec<f64>>)> = real_terms(&big.conj_reverse())?;
    let phi_ring = phi.refine_combine(1, &ring_terms)?;
    let phi_tilde_ring = phi_tilde.refine_combine(1, &real_terms(&big.transpose())?)?;
    let psi_moments = wavelet_moments(&bank.b, &exact_moments(phi, VMO_MAX)?);
    let psi_tilde_moments = wavelet_moments(&bank.b_tilde, &exact_moments(phi_tilde, VMO_MAX)?);
    Ok(DualFramelet {
        phi: phi.clone(),
        phi_tilde: phi_tilde.clone(),
        psi,
        psi_tilde,
        eta,
        eta_tilde,
        phi_ring,
        phi_tilde_ring,
        psi_moments,
        psi_tilde_moments,
        bank: bank.clone(),
    })
}

impl DualFramelet {
    pub fn phi(&self) -> &FunctionHandle {
        &self.phi
    }

    pub fn phi_tilde(&self) -> &FunctionHandle {
        &self.phi_tilde
    }

    pub fn psi(&self) -> &FunctionHandle {
        &self.psi
    }

    pub fn psi_tilde(&self) -> &FunctionHandle {
        &self.psi_tilde
    }

    pub fn eta(&self) -> &FunctionHandle {
        &self.eta
    }

    pub fn eta_tilde(&self) -> &FunctionHandle {
        &self.eta_tilde
    }

    pub fn phi_ring(&self) -> &FunctionHandle {
        &self.phi_ring
    }

    pub fn phi_tilde_ring(&self) -> &FunctionHandle {
        &self.phi_tilde_ring
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    /// Moments of `ψ` from the filters.
    pub fn psi_moments(&self) -> &[Vec<f64>] {
        &self.psi_moments
    }

    pub fn psi_tilde_moments(&self) -> &[Vec<f64>] {
        &self.psi_tilde_moments
    }

    pub fn vmo_psi(&self) -> usize {
        vmo_from_moments(&self.psi_moments)
    }

    pub fn vmo_psi_tilde(&self) -> usize {
        vmo_from_moments(&self.psi_tilde_moments)
    }

    /// The pair `(η, η̃)` whose operators the expansions truncate to.
    pub fn pair(&self) -> Result<QuasiProjectionPair> {
        QuasiProjectionPair::new(self.eta.clone(), self.eta_tilde.clone())
    }

    /// The equivalent pair `(φ, φ̃̊)`.
    pub fn ring_pair(&self) -> Result<QuasiProjectionPair> {
        QuasiProjectionPair::new(self.phi.clone(), self.phi_tilde_ring.clone())
    }

    fn support_bound(&self) -> f64 {
        [&self.eta, &self.eta_tilde, &self.psi, &self.psi_tilde]
            .iter()
            .flat_map(|f| {
                let (a, b) = f.support();
                [a.abs(), b.abs()]
            })
            .fold(1.0, f64::max)
            .ceil()
    }
}

/// `Aₙf = Σ_k ⟨f, η̃(·−k)⟩η(·−k) + Σ_{j<n} Σ_k ⟨f, 2^jψ̃(2^j·−k)⟩ψ(2^j·−k)`
/// by direct summation on the grid.
pub fn truncated_expansion(df: &DualFramelet, f: &Signal, n: u32, grid: &Grid) -> Result<SampledFunction> {
    let w = 2.0 * df.support_bound() + 3.0;
    let (a, b) = grid.window.unwrap_or((-w, w));
    if !(a < b) {
        return Err(GibbsError::InvalidInput(format!("empty window [{a}, {b}]")));
    }
    let h = grid.step();
    let anchor = df.eta.sample_grid().map(|(_, o)| o.rem_euclid(h)).unwrap_or(0.0);
    let (x0, count) = grid_points(h, (a, b), anchor);
    if count == 0 {
        return Err(GibbsError::InvalidInput(format!(
            "window [{a}, {b}] contains no grid point"
        )));
    }
    let coarse = Analyzer::new(df.eta_tilde.clone());
    let mut total = level_sum(&coarse, &df.eta, f, 0, 0.0, x0, h, count);
    let wavelet = Analyzer::new(df.psi_tilde.clone());
    for j in 0..n {
        let part = level_sum(&wavelet, &df.psi, f, j, 0.0, x0, h, count);
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    SampledFunction::new(grid.level, x0, vec![total])
}

/// `|Σ_k⟨f,η̃_{n−1;k}⟩⟨η_{n−1;k},g⟩ + Σ_k⟨f,ψ̃_{n−1;k}⟩⟨ψ_{n−1;k},g⟩
///  − Σ_k⟨f,η̃_{n;k}⟩⟨η_{n;k},g⟩|` with `f_{n;k} = 2^{n/2}f(2ⁿ·−k)`.
pub fn cascade_identity_check(df: &DualFramelet, f: &Signal, g: &Signal, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(GibbsError::InvalidInput("level n must be at least 1".into()));
    }
    let (Some(fs), Some(gs)) = (f.support(), g.support()) else {
        return Err(GibbsError::InvalidInput(
            "test functions must have bounded support".into(),
        ));
    };
    let level = |analysis: &FunctionHandle, synthesis: &FunctionHandle, m: u32| -> f64 {
        let scale = (m as f64).exp2();
        let (ta, tb) = analysis.support();
        let (pa, pb) = synthesis.support();
        let lo = ((scale * fs.0 - tb).floor() as i64).max((scale * gs.0 - pb).floor() as i64);
        let hi = ((scale * fs.1 - ta).ceil() as i64).min((scale * gs.1 - pa).ceil() as i64);
        let af = Analyzer::new(analysis.clone());
        let ag = Analyzer::new(synthesis.clone());
        let sum: f64 = (lo..=hi)
            .map(|k| {
                let cf = af.coeff(f, m, k, 0.0);
                let cg = ag.coeff(g, m, k, 0.0);
                cf.iter().zip(&cg).map(|(u, v)| u * v).sum::<f64>()
            })
            .sum();
        sum / scale
    };
    let lhs = level(&df.eta_tilde, &df.eta, n - 1) + level(&df.psi_tilde, &df.psi, n - 1);
    let rhs = level(&df.eta_tilde, &df.eta, n);
    Ok((lhs - rhs).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameletVerdict {
    GibbsEverywhere,
    NoGibbsAtOrigin,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameletReport {
    pub vmo_psi: usize,
    pub vmo_psi_tilde: usize,
    pub phi_continuous: bool,
    pub nonnegative: bool,
    /// `[conj(φ̂)ᵀ Θ̂ᵀ φ̃̂]″(0)`.
    pub bracket: Complex64,
    /// `R(0)` and `L(0)` of the truncation operators.
    pub r0: f64,
    pub l0: f64,
    pub verdict: FrameletVerdict,
    /// On the nonnegative branch: both generators have exactly one
    /// vanishing moment.
    pub vmo_consistent: Option<bool>,
}

/// Bracket magnitude accepted as zero on the everywhere-Gibbs branch.
pub const BRACKET_ZERO_TOL: f64 = 1e-6;

pub fn framelet_gibbs_verdict(df: &DualFramelet, level: u32) -> Result<FrameletReport> {
    let vmo_psi = df.vmo_psi();
    let vmo_psi_tilde = df.vmo_psi_tilde();
    let phi_continuous = df.phi.is_continuous();
    let nonnegative = df.phi.min_value(10) >= -NONNEG_TOL && df.phi_tilde.min_value(10) >= -NONNEG_TOL;
    let ring = df.ring_pair()?;
    let bracket = bracket_second_deriv(&ring)?.value;
    let o = overshoot(&df.pair()?, 0.0, level)?;
    let (verdict, vmo_consistent) = if vmo_psi >= 2 && vmo_psi_tilde >= 1 && phi_continuous {
        if bracket.norm() > BRACKET_ZERO_TOL {
            return Err(GibbsError::Numerical(format!(
                "bracket {bracket} should vanish with {vmo_psi} and {vmo_psi_tilde} vanishing moments"
            )));
        }
        (FrameletVerdict::GibbsEverywhere, None)
    } else if nonnegative {
        (
            FrameletVerdict::NoGibbsAtOrigin,
            Some(vmo_psi == 1 && vmo_psi_tilde == 1),
        )
    } else {
        (FrameletVerdict::Inconclusive, None)
    };
    Ok(FrameletReport {
        vmo_psi,
        vmo_psi_tilde,
        phi_continuous,
        nonnegative,
        bracket,
        r0: o.r,
        l0: o.l,
        verdict,
        vmo_consistent,
    })
}

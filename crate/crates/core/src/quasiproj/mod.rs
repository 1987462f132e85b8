//! Quasi-projection operators
//! `Q_{n,t} f = Σ_k ⟨f, 2ⁿφ̃(2ⁿ· − k + t)⟩ φ(2ⁿ· − k + t)`.

mod signal;

pub use signal::Signal;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GibbsError, Result};
use crate::funcmodel::sampled::MAX_LEVEL;
use crate::funcmodel::{FunctionHandle, SampledFunction, Side};

/// Moment orders cached per function (`0..=MOMENT_CACHE − 1`).
pub const MOMENT_CACHE: usize = 7;

/// Residual below which polynomial reproduction counts as exact.
pub const REPRODUCTION_TOL: f64 = 1e-8;

/// Analysis side of a level sum: computes `∫ f(2^{−n}(z + k − t)) g(z) dz`.
#[derive(Clone, Debug)]
pub struct Analyzer {
    g: FunctionHandle,
    moments: Vec<Vec<f64>>,
}

impl Analyzer {
    pub fn new(g: FunctionHandle) -> Self {
        let moments = (0..MOMENT_CACHE).map(|j| g.moment(j)).collect();
        Analyzer { g, moments }
    }

    pub fn function(&self) -> &FunctionHandle {
        &self.g
    }

    pub fn moment(&self, j: usize) -> Vec<f64> {
        match self.moments.get(j) {
            Some(m) => m.clone(),
            None => self.g.moment(j),
        }
    }

    pub fn moments(&self) -> &[Vec<f64>] {
        &self.moments
    }

    /// `∫ f(2^{−n}(z + k − t)) g(z) dz`.
    pub fn coeff(&self, f: &Signal, n: u32, k: i64, t: f64) -> Vec<f64> {
        let scale = (n as f64).exp2();
        let shift = k as f64 - t;
        match f {
            Signal::Sign { at } => {
                let a = scale * at - shift;
                let right = self.g.halfline_integral(a, Side::Right);
                let left = self.g.halfline_integral(a, Side::Left);
                right.iter().zip(&left).map(|(r, l)| r - l).collect()
            }
            Signal::Monomial { degree } => {
                let j = *degree as usize;
                let mut out = vec![0.0; self.g.components()];
                let mut binom = 1.0;
                for i in 0..=j {
                    // C(j, i) s^{j−i} μ_i
                    let w = binom * shift.powi((j - i) as i32);
                    for (o, m) in out.iter_mut().zip(self.moment(i)) {
                        *o += w * m;
                    }
                    binom = binom * (j - i) as f64 / (i + 1) as f64;
                }
                let s = scale.powi(-(j as i32));
                out.into_iter().map(|v| v * s).collect()
            }
            _ => {
                let inv = 1.0 / scale;
                let h = |z: f64| f.eval(inv * (z + shift));
                let breaks: Vec<f64> = f.jumps().iter().map(|b| scale * b - shift).collect();
                self.g.integrate_against(&h, &breaks)
            }
        }
    }
}

/// Dyadic evaluation grid: points `anchor + j·2^{−level}` inside `window`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub level: u32,
    pub window: Option<(f64, f64)>,
}

impl Grid {
    pub fn new(level: u32) -> Self {
        Grid {
            level,
            window: None,
        }
    }

    pub fn with_window(self, a: f64, b: f64) -> Self {
        Grid {
            window: Some((a, b)),
            ..self
        }
    }

    pub fn step(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }
}

/// First point and number of points of `anchor + h·ℤ` inside `[a, b]`.
pub(crate) fn grid_points(h: f64, (a, b): (f64, f64), anchor: f64) -> (f64, usize) {
    let j0 = ((a - anchor) / h - 1e-9).ceil();
    let x0 = anchor + j0 * h;
    if x0 > b + 1e-12 {
        return (x0, 0);
    }
    let count = ((b - x0) / h + 1e-9).floor() as usize + 1;
    (x0, count)
}

/// Values at `x0 + j·h` of `Σ_k c_k · synth(2ⁿx − k + t)` with
/// `c_k = analysis.coeff(f, n, k, t)`.
pub(crate) fn level_sum(
    analysis: &Analyzer,
    synth: &FunctionHandle,
    f: &Signal,
    n: u32,
    t: f64,
    x0: f64,
    h: f64,
    count: usize,
) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    let scale = (n as f64).exp2();
    let (sa, sb) = synth.support();
    let x_last = x0 + (count - 1) as f64 * h;
    let kmin = (scale * x0 + t - sb).floor() as i64;
    let kmax = (scale * x_last + t - sa).ceil() as i64;
    let coeffs: Vec<Vec<f64>> = (kmin..=kmax)
        .into_par_iter()
        .map(|k| analysis.coeff(f, n, k, t))
        .collect();
    (0..count)
        .into_par_iter()
        .map(|j| {
            let u0 = scale * (x0 + j as f64 * h) + t;
            let lo = ((u0 - sb).ceil() as i64).max(kmin);
            let hi = ((u0 - sa).floor() as i64).min(kmax);
            (lo..=hi)
                .map(|k| synth.dot_eval(u0 - k as f64, &coeffs[(k - kmin) as usize]))
                .sum()
        })
        .collect()
}

/// A pair `(φ, φ̃)` defining `Q_{n,t}`, with cached moments.
#[derive(Clone, Debug)]
pub struct QuasiProjectionPair {
    phi: FunctionHandle,
    phi_moments: Vec<Vec<f64>>,
    tilde: Analyzer,
    support_bound: i64,
}

impl QuasiProjectionPair {
    pub fn new(phi: FunctionHandle, phi_tilde: FunctionHandle) -> Result<Self> {
        if phi.components() != phi_tilde.components() {
            return Err(GibbsError::DimensionMismatch(format!(
                "φ has {} components, φ̃ has {}",
                phi.components(),
                phi_tilde.components()
            )));
        }
        let (a0, b0) = phi.support();
        let (a1, b1) = phi_tilde.support();
        let bound = [a0, b0, a1, b1]
            .iter()
            .map(|x| x.abs())
            .fold(0.0f64, f64::max);
        let support_bound = ((bound - 1e-9).ceil() as i64).max(1);
        let phi_moments = (0..MOMENT_CACHE).map(|j| phi.moment(j)).collect();
        Ok(QuasiProjectionPair {
            phi,
            phi_moments,
            tilde: Analyzer::new(phi_tilde),
            support_bound,
        })
    }

    pub fn phi(&self) -> &FunctionHandle {
        &self.phi
    }

    pub fn phi_tilde(&self) -> &FunctionHandle {
        self.tilde.function()
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.tilde
    }

    pub fn components(&self) -> usize {
        self.phi.components()
    }

    /// `∫ x^j φ`.
    pub fn phi_moment(&self, j: usize) -> Vec<f64> {
        match self.phi_moments.get(j) {
            Some(m) => m.clone(),
            None => self.phi.moment(j),
        }
    }

    /// `∫ x^j φ̃`.
    pub fn phi_tilde_moment(&self, j: usize) -> Vec<f64> {
        self.tilde.moment(j)
    }

    /// Smallest integer `N ≥ 1` with both supports inside `[−N, N]`.
    pub fn support_bound(&self) -> i64 {
        self.support_bound
    }

    /// The pair with the roles of `φ` and `φ̃` exchanged.
    pub fn swapped(&self) -> Result<Self> {
        QuasiProjectionPair::new(self.phi_tilde().clone(), self.phi.clone())
    }

    /// The pair `(φ(· + c), φ̃(· + c))`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        QuasiProjectionPair::new(self.phi.translate(-c), self.phi_tilde().translate(-c))
    }

    /// Default half-width `(2N + 3)/2ⁿ` of evaluation windows.
    pub fn default_half_width(&self, n: u32) -> f64 {
        (2 * self.support_bound + 3) as f64 / (n as f64).exp2()
    }

    /// Grid anchor that puts the arguments `2ⁿx − k + t` on the sample grid
    /// of a sampled `φ` (the two lattices nest at every level).
    pub fn anchor(&self, n: u32, t: f64, level: u32) -> f64 {
        let h = (-(level as f64)).exp2();
        match self.phi.sample_grid() {
            Some((_, origin)) => ((origin - t) / (n as f64).exp2()).rem_euclid(h),
            None => 0.0,
        }
    }

    fn grid_window(&self, f: &Signal, n: u32, grid: &Grid) -> (f64, f64) {
        grid.window.unwrap_or_else(|| {
            let c = match f {
                Signal::Sign { at } => *at,
                _ => 0.0,
            };
            let w = self.default_half_width(n);
            (c - w, c + w)
        })
    }
}

/// Samples of `[Q_{n,t} f](x)` on the grid.
pub fn apply(
    pair: &QuasiProjectionPair,
    f: &Signal,
    n: u32,
    t: f64,
    grid: &Grid,
) -> Result<SampledFunction> {
    if grid.level > MAX_LEVEL {
        return Err(GibbsError::InvalidInput(format!(
            "grid level {} exceeds {MAX_LEVEL}",
            grid.level
        )));
    }
    let (a, b) = pair.grid_window(f, n, grid);
    if !(a < b) {
        return Err(GibbsError::InvalidInput(format!("empty window [{a}, {b}]")));
    }
    if let Signal::Sign { at } = f {
        let r = (2 * pair.support_bound + 1) as f64 / (n as f64).exp2();
        let (need_lo, need_hi) = (at - r, at + r);
        if a > need_lo || b < need_hi {
            return Err(GibbsError::WindowTooSmall {
                have_lo: a,
                have_hi: b,
                need_lo,
                need_hi,
            });
        }
    }
    let h = grid.step();
    let (x0, count) = grid_points(h, (a, b), pair.anchor(n, t, grid.level));
    if count == 0 {
        return Err(GibbsError::InvalidInput(format!(
            "window [{a}, {b}] contains no grid point"
        )));
    }
    let values = level_sum(&pair.tilde, &pair.phi, f, n, t, x0, h, count);
    SampledFunction::new(grid.level, x0, vec![values])
}

/// Result of [`check_qp1`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Qp1Report {
    pub ok: bool,
    /// `|conj(φ̃̂(0))ᵀφ̂(0) − 1|`.
    pub normalization_residual: f64,
    /// `sup_x |Σ_k conj(φ̃̂(0))ᵀφ(x − k) − 1|` on a grid of one period.
    pub partition_residual: f64,
}

/// Tolerance of [`check_qp1`].
pub const QP1_TOL: f64 = 1e-9;

/// Checks `Q1 = 1`: the normalization from moments and the 2πk
/// conditions through constancy of the shifted sum.
pub fn check_qp1(pair: &QuasiProjectionPair) -> Qp1Report {
    let w = pair.phi_tilde_moment(0);
    let norm: f64 = w.iter().zip(pair.phi_moment(0)).map(|(a, b)| a * b).sum();
    let level = 10;
    let h = (-(level as f64)).exp2();
    let (x0, count) = grid_points(h, (0.0, 1.0 - h / 2.0), pair.anchor(0, 0.0, level));
    let (sa, sb) = pair.phi.support();
    let partition = (0..count)
        .into_par_iter()
        .map(|j| {
            let x = x0 + j as f64 * h;
            let lo = (x - sb).ceil() as i64;
            let hi = (x - sa).floor() as i64;
            let s: f64 = (lo..=hi).map(|k| pair.phi.dot_eval(x - k as f64, &w)).sum();
            (s - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max);
    let normalization_residual = (norm - 1.0).abs();
    Qp1Report {
        ok: normalization_residual <= QP1_TOL && partition <= QP1_TOL,
        normalization_residual,
        partition_residual: partition,
    }
}

/// `K(x, y) = Σ_k conj(φ̃(y − k))ᵀ φ(x − k)`.
pub fn kernel_k(pair: &QuasiProjectionPair, x: f64, y: f64) -> f64 {
    let (pa, pb) = pair.phi.support();
    let (ta, tb) = pair.phi_tilde().support();
    let lo = ((x - pb).ceil() as i64).max((y - tb).ceil() as i64);
    let hi = ((x - pa).floor() as i64).min((y - ta).floor() as i64);
    (lo..=hi)
        .map(|k| {
            let w = pair.phi_tilde().eval(y - k as f64);
            pair.phi.dot_eval(x - k as f64, &w)
        })
        .sum()
}

/// Result of [`kernel_criterion`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub ok: bool,
    /// Grid point of the largest violation (of either inequality).
    pub worst_x: f64,
    /// `∫₀^∞ K(worst_x, y) dy`.
    pub worst_value: f64,
    /// Largest value of `∫₀^∞ K(x, y) dy` over grid `x > 0` and its location.
    pub max_right: (f64, f64),
    /// Smallest value over grid `x < 0` and its location.
    pub min_left: (f64, f64),
}

/// Checks `∫₀^∞ K(x, y) dy ≤ 1` for `x > 0` and `≥ 0` for `x < 0` on the
/// grid of `[−half_width, half_width]`.
pub fn kernel_criterion(pair: &QuasiProjectionPair, half_width: Option<f64>, level: u32) -> KernelReport {
    let w = half_width.unwrap_or_else(|| pair.default_half_width(0));
    let h = (-(level as f64)).exp2();
    let (x0, count) = grid_points(h, (-w, w), pair.anchor(0, 0.0, level));
    let (sa, sb) = pair.phi.support();
    let kmin = (-w - sb).floor() as i64;
    let kmax = (w - sa).ceil() as i64;
    let right: Vec<Vec<f64>> = (kmin..=kmax)
        .map(|k| pair.phi_tilde().halfline_integral(-(k as f64), Side::Right))
        .collect();
    let evals: Vec<(f64, f64)> = (0..count)
        .into_par_iter()
        .map(|j| {
            let x = x0 + j as f64 * h;
            let lo = ((x - sb).ceil() as i64).max(kmin);
            let hi = ((x - sa).floor() as i64).min(kmax);
            let v: f64 = (lo..=hi)
                .map(|k| pair.phi.dot_eval(x - k as f64, &right[(k - kmin) as usize]))
                .sum();
            (x, v)
        })
        .collect();
    let mut max_right = (f64::NAN, f64::NEG_INFINITY);
    let mut min_left = (f64::NAN, f64::INFINITY);
    for &(x, v) in &evals {
        if x > 0.0 && v > max_right.1 {
            max_right = (x, v);
        } else if x < 0.0 && v < min_left.1 {
            min_left = (x, v);
        }
    }
    let (worst_x, worst_value) = if max_right.1 - 1.0 >= -min_left.1 {
        max_right
    } else {
        min_left
    };
    KernelReport {
        ok: max_right.1 <= 1.0 + 1e-9 && min_left.1 >= -1e-9,
        worst_x,
        worst_value,
        max_right,
        min_left,
    }
}

/// Sup-norm residuals `‖Q(x^j) − x^j‖` for `j < m` on the grid window
/// (default `[−1, 1]`).
pub fn poly_reproduction(pair: &QuasiProjectionPair, m: usize, grid: &Grid) -> Result<Vec<f64>> {
    let window = grid.window.unwrap_or((-1.0, 1.0));
    let g = Grid {
        level: grid.level,
        window: Some(window),
    };
    (0..m)
        .map(|j| {
            let q = apply(pair, &Signal::Monomial { degree: j as u32 }, 0, 0.0, &g)?;
            Ok((0..q.len())
                .map(|i| (q.values()[0][i] - q.x(i).powi(j as i32)).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

/// Largest `m ≤ m_max` with all reproduction residuals of degree `< m`
/// below [`REPRODUCTION_TOL`].
pub fn accuracy_order(pair: &QuasiProjectionPair, m_max: usize) -> Result<usize> {
    let res = poly_reproduction(pair, m_max, &Grid::new(8))?;
    Ok(res.iter().take_while(|r| **r < REPRODUCTION_TOL).count())
}

/// Result of [`approximation_rate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub levels: Vec<u32>,
    pub errors: Vec<f64>,
    /// Negative least-squares slope of `log₂ error` against `n`.
    pub slope: f64,
}

/// Levels above `n` at which `‖Qₙf − f‖_{L₂}` is sampled.
const RATE_OVERSAMPLING: u32 = 6;

/// Empirical decay rate of `‖Qₙ f − f‖_{L₂(window)}`.
pub fn approximation_rate(
    pair: &QuasiProjectionPair,
    f: &Signal,
    levels: &[u32],
    window: (f64, f64),
) -> Result<RateReport> {
    if levels.len() < 2 {
        return Err(GibbsError::InvalidInput(
            "need at least two levels to fit a slope".into(),
        ));
    }
    let mut errors = Vec::with_capacity(levels.len());
    for &n in levels {
        let level = (n + RATE_OVERSAMPLING).min(MAX_LEVEL);
        let q = apply(pair, f, n, 0.0, &Grid::new(level).with_window(window.0, window.1))?;
        let h = q.step();
        let len = q.len();
        let sq: f64 = (0..len)
            .map(|i| {
                let w = if i == 0 || i + 1 == len { 0.5 } else { 1.0 };
                let d = q.values()[0][i] - f.eval(q.x(i));
                w * d * d
            })
            .sum();
        errors.push((sq * h).sqrt());
    }
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(RateReport {
        levels: levels.to_vec(),
        errors,
        slope: -num / den,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::bspline;
    use approx::assert_abs_diff_eq;

    fn spline_pair(m: usize) -> QuasiProjectionPair {
        let b: FunctionHandle = bspline(m).unwrap().into();
        QuasiProjectionPair::new(b.clone(), b).unwrap()
    }

    #[test]
    fn haar_sign_is_exact_off_origin() {
        let pair = spline_pair(1);
        let q = apply(&pair, &Signal::sign(), 0, 0.0, &Grid::new(6)).unwrap();
        for i in 0..q.len() {
            let x = q.x(i);
            if x != 0.0 {
                assert_eq!(q.values()[0][i], x.signum(), "x={x}");
            }
        }
    }

    #[test]
    fn constant_is_reproduced() {
        for m in 1..=4 {
            let pair = spline_pair(m);
            let q = apply(&pair, &Signal::constant(), 0, 0.3, &Grid::new(7)).unwrap();
            for v in &q.values()[0] {
                assert!((v - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sign_settles_outside_support_zone() {
        let pair = spline_pair(2);
        assert_eq!(pair.support_bound(), 2);
        let q = apply(&pair, &Signal::sign(), 0, 0.0, &Grid::new(6)).unwrap();
        for i in 0..q.len() {
            let x = q.x(i);
            if x.abs() > 5.0 {
                assert_eq!(q.values()[0][i], x.signum());
            }
        }
    }

    #[test]
    fn small_window_is_rejected() {
        let pair = spline_pair(2);
        let err = apply(&pair, &Signal::sign(), 0, 0.0, &Grid::new(6).with_window(-1.0, 1.0))
            .unwrap_err();
        match err {
            GibbsError::WindowTooSmall { need_lo, need_hi, .. } => {
                assert_eq!((need_lo, need_hi), (-5.0, 5.0));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn qp1_examples() {
        assert!(check_qp1(&spline_pair(1)).ok);
        assert!(check_qp1(&spline_pair(1)).partition_residual < 1e-12);
        assert!(check_qp1(&spline_pair(2)).ok);
        let b2 = bspline(2).unwrap();
        let pair =
            QuasiProjectionPair::new(b2.clone().into(), b2.scale(2.0).into()).unwrap();
        let r = check_qp1(&pair);
        assert!(!r.ok);
        assert_abs_diff_eq!(r.normalization_residual, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn kernel_examples() {
        let haar = spline_pair(1);
        assert_abs_diff_eq!(kernel_k(&haar, 0.5, 0.5), 1.0);
        assert_abs_diff_eq!(kernel_k(&haar, 0.5, 5.5), 0.0);
        assert_abs_diff_eq!(kernel_k(&spline_pair(2), 1.0, 1.0), 1.0);
        assert!(kernel_criterion(&haar, None, 8).ok);
        assert!(kernel_criterion(&spline_pair(3), None, 8).ok);
    }

    #[test]
    fn reproduction_examples() {
        let r = poly_reproduction(&spline_pair(1), 1, &Grid::new(8)).unwrap();
        assert!(r[0] < 1e-12);
        assert_eq!(accuracy_order(&spline_pair(1), 6).unwrap(), 1);
        // Symmetric hat: ⟨x, B₂(·−k)⟩ = k + 1 and Σ_k k B₂(x−k) = x − 1.
        let r = poly_reproduction(&spline_pair(2), 3, &Grid::new(8)).unwrap();
        assert!(r[0] < 1e-12 && r[1] < 1e-12);
        assert!(r[2] > 0.01);
        assert_eq!(accuracy_order(&spline_pair(2), 6).unwrap(), 2);
    }

    #[test]
    fn scale_shift_identity() {
        let pair = spline_pair(3);
        let f = Signal::Sine { frequency: 1.3 };
        let n = 3;
        let fine = apply(&pair, &f, n, 0.0, &Grid::new(9).with_window(-1.0, 1.0)).unwrap();
        let scaled = Signal::Sine { frequency: 1.3 / 8.0 };
        let coarse = apply(&pair, &scaled, 0, 0.0, &Grid::new(6).with_window(-8.0, 8.0)).unwrap();
        for i in 0..coarse.len() {
            let x = coarse.x(i);
            let v = fine.eval(x / 8.0)[0];
            assert!((v - coarse.values()[0][i]).abs() < 1e-10, "x={x}");
        }
    }
}

//! Overshoot of `Q_{n,t} sgn`: the moment identity for
//! `∫ x (sgn − Q sgn)`, overshoot functions and point verdicts.

use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{GibbsError, Result};
use crate::funcmodel::quadrature::integrate;
use crate::funcmodel::{FunctionHandle, Side};
use crate::quasiproj::{
    apply, check_qp1, poly_reproduction, Grid, QuasiProjectionPair, Signal, REPRODUCTION_TOL,
};

/// Tolerance for sign checks in [`nonneg_sufficient`].
pub const NONNEG_TOL: f64 = 1e-10;

/// Grid sup-difference below which `Q sgn ≠ sgn` cannot be confirmed.
pub const SGN_COND_TOL: f64 = 1e-9;

/// Longest odd part of a denominator accepted by [`cluster_set`].
pub const MAX_CYCLE_MODULUS: i64 = 1 << 24;

/// `κ_j = ∫₀¹ Σ_n n^j φ̃(x − n) dx = Σ_n n^j ∫_{−n}^{1−n} φ̃`.
pub fn kappa(phi_tilde: &FunctionHandle, j: u32) -> Vec<f64> {
    let (a, b) = phi_tilde.support();
    let lo = (-b).floor() as i64;
    let hi = (1.0 - a).ceil() as i64;
    let mut out = vec![0.0; phi_tilde.components()];
    for n in lo..=hi {
        let w = (n as f64).powi(j as i32);
        if w == 0.0 {
            continue;
        }
        let s = phi_tilde.integral(-(n as f64), 1.0 - n as f64);
        for (o, v) in out.iter_mut().zip(s) {
            *o += w * v;
        }
    }
    out
}

fn dot_conj(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn real_vec(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Closed form of `∫ x (sgn(x) − Q sgn(x)) dx` from moments and `κ_j`.
pub fn identity_rhs(pair: &QuasiProjectionPair) -> Result<Complex64> {
    let qp1 = check_qp1(pair);
    if !qp1.ok {
        return Err(GibbsError::Precondition(format!(
            "pair fails Q1 = 1 (normalization residual {:.3e}, partition residual {:.3e})",
            qp1.normalization_residual, qp1.partition_residual
        )));
    }
    let phi = pair.phi();
    let d0 = phi.fhat_deriv0(0);
    let d1 = phi.fhat_deriv0(1);
    let d2 = phi.fhat_deriv0(2);
    let t0 = real_vec(&pair.phi_tilde_moment(0));
    let k1 = real_vec(&kappa(pair.phi_tilde(), 1));
    let k2 = real_vec(&kappa(pair.phi_tilde(), 2));
    let k12: Vec<Complex64> = k1.iter().zip(&k2).map(|(a, b)| a - b).collect();
    let i = Complex64::i();
    Ok(Complex64::new(1.0 / 6.0, 0.0) - dot_conj(&d0, &k12) - dot_conj(&d2, &t0)
        + i * dot_conj(&d1, &t0)
        - 2.0 * i * dot_conj(&d1, &k1))
}

/// `∫ x (sgn(x) − Q sgn(x)) dx` with `Q = Q_{0,0}`.
pub fn identity_lhs(pair: &QuasiProjectionPair, level: u32) -> Result<f64> {
    identity_lhs_shifted(pair, 0.0, level)
}

/// `∫ x (sgn(x) − Q_{0,t} sgn(x)) dx`.
///
/// Piecewise-polynomial `φ`: Gauss–Legendre between all breakpoints (exact
/// up to rounding). Sampled `φ`: `Q_{0,t} sgn` on the aligned grid of the
/// given level, integrated exactly as a piecewise-linear function.
pub fn identity_lhs_shifted(pair: &QuasiProjectionPair, t: f64, level: u32) -> Result<f64> {
    let t = t.rem_euclid(1.0);
    let w = (2 * pair.support_bound() + 1) as f64;
    match pair.phi().as_poly() {
        Some(p) => {
            let (pa, pb) = p.support();
            let kmin = (-w + t - pb).floor() as i64;
            let kmax = (w + t - pa).ceil() as i64;
            let coeffs: Vec<(i64, Vec<f64>)> = (kmin..=kmax)
                .map(|k| (k, pair.analyzer().coeff(&Signal::sign(), 0, k, t)))
                .collect();
            let mut breaks = vec![-w, 0.0, w];
            for k in kmin..=kmax {
                for b in p.breakpoints() {
                    let x = b + k as f64 - t;
                    if x > -w && x < w {
                        breaks.push(x);
                    }
                }
            }
            breaks.sort_by(f64::total_cmp);
            breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
            let q = |x: f64| -> f64 {
                coeffs
                    .iter()
                    .map(|(k, c)| p.dot_eval(x - *k as f64 + t, c))
                    .sum()
            };
            let total: f64 = breaks
                .par_windows(2)
                .map(|ab| {
                    let (a, b) = (ab[0], ab[1]);
                    let s = if a + b > 0.0 { 1.0 } else { -1.0 };
                    integrate(|x| x * (s - q(x)), a, b, 1)
                })
                .sum();
            Ok(total)
        }
        None => {
            let q = apply(pair, &Signal::sign(), 0, t, &Grid::new(level).with_window(-w, w))?;
            let h = q.step();
            let v = &q.values()[0];
            let mut qpart = 0.0;
            for j in 0..v.len() - 1 {
                let a = q.x(j);
                qpart += h * (a * 0.5 * (v[j] + v[j + 1]) + h * (v[j] / 6.0 + v[j + 1] / 3.0));
            }
            let (a, b) = (q.x(0), q.x(v.len() - 1));
            let abs_part = 0.5 * (b * b.abs() - a * a.abs());
            Ok(abs_part - qpart)
        }
    }
}

/// Value of `[conj(φ̂)ᵀφ̃̂]″(0)` with a flag for the dual accuracy condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BracketReport {
    pub value: Complex64,
    /// The swapped pair reproduces polynomials of degree `< 2`.
    pub hypotheses_met: bool,
}

/// `[conj(φ̂)ᵀφ̃̂]″(0) = conj(φ̂″)ᵀφ̃̂ + 2 conj(φ̂′)ᵀφ̃̂′ + conj(φ̂)ᵀφ̃̂″` at 0.
pub fn bracket_second_deriv(pair: &QuasiProjectionPair) -> Result<BracketReport> {
    let p: Vec<Vec<Complex64>> = (0..3).map(|j| pair.phi().fhat_deriv0(j)).collect();
    let q: Vec<Vec<Complex64>> = (0..3).map(|j| pair.phi_tilde().fhat_deriv0(j)).collect();
    let value = dot_conj(&p[2], &q[0]) + 2.0 * dot_conj(&p[1], &q[1]) + dot_conj(&p[0], &q[2]);
    let dual = poly_reproduction(&pair.swapped()?, 2, &Grid::new(8))?;
    Ok(BracketReport {
        value,
        hypotheses_met: dual.iter().all(|r| *r < REPRODUCTION_TOL),
    })
}

/// `R(t)` and `L(t)`, the extreme values of `Q_{0,t} sgn` on each half-line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Overshoot {
    pub t: f64,
    pub r: f64,
    pub l: f64,
    /// `sup |Q_{0,t} sgn − sgn|` over grid points off the jump.
    pub sgn_deviation: f64,
}

/// Grid evaluation of `R(t)` and `L(t)`; `Q_{0,t} sgn = sgn` outside the
/// window so the half-line extremes are at least `±1`.
pub fn overshoot(pair: &QuasiProjectionPair, t: f64, level: u32) -> Result<Overshoot> {
    let w = (2 * pair.support_bound() + 1) as f64;
    let q = apply(pair, &Signal::sign(), 0, t, &Grid::new(level).with_window(-w, w))?;
    let (mut r, mut l, mut dev) = (1.0f64, -1.0f64, 0.0f64);
    for (j, v) in q.values()[0].iter().enumerate() {
        let x = q.x(j);
        if x > 0.0 {
            r = r.max(*v);
            dev = dev.max((v - 1.0).abs());
        } else if x < 0.0 {
            l = l.min(*v);
            dev = dev.max((v + 1.0).abs());
        }
    }
    Ok(Overshoot {
        t,
        r,
        l,
        sgn_deviation: dev,
    })
}

/// `R(t), L(t)` at `t = i/samples`, `i = 0..samples`.
pub fn overshoot_curve(pair: &QuasiProjectionPair, samples: usize, level: u32) -> Result<Vec<Overshoot>> {
    (0..samples)
        .into_par_iter()
        .map(|i| overshoot(pair, i as f64 / samples as f64, level))
        .collect()
}

/// A point `x₀`: exact rational or an unspecified irrational.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Point {
    Rational(Ratio<i64>),
    Irrational,
}

impl Point {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Point::Rational(r) => Some(*r.numer() as f64 / *r.denom() as f64),
            Point::Irrational => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Point::Irrational => f.write_str("irrational"),
        }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parses `"p/q"`, an integer `"p"` or `"irrational"`.
pub fn parse_point(s: &str) -> Result<Point> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("irrational") {
        return Ok(Point::Irrational);
    }
    let bad = || GibbsError::InvalidInput(format!("malformed rational point {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: i64 = p.parse().map_err(|_| bad())?;
    let q: i64 = q.parse().map_err(|_| bad())?;
    if q <= 0 {
        return Err(bad());
    }
    Ok(Point::Rational(Ratio::new(p, q)))
}

/// Cluster points of `⟨2ⁿx₀⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClusterSet {
    Finite(Vec<Ratio<i64>>),
    FullInterval,
}

impl ClusterSet {
    /// Points as floats; `FullInterval` maps to `density` uniform samples.
    pub fn sample_points(&self, density: usize) -> Vec<f64> {
        match self {
            ClusterSet::Finite(v) => v
                .iter()
                .map(|r| *r.numer() as f64 / *r.denom() as f64)
                .collect(),
            ClusterSet::FullInterval => (0..density).map(|i| i as f64 / density as f64).collect(),
        }
    }
}

impl Serialize for ClusterSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ClusterSet::Finite(v) => s.collect_seq(v.iter().map(|r| format!("{}/{}", r.numer(), r.denom()))),
            ClusterSet::FullInterval => s.serialize_str("full-interval"),
        }
    }
}

fn odd_part(mut q: i64) -> i64 {
    while q % 2 == 0 {
        q /= 2;
    }
    q
}

/// `S_{x₀}`: `{0}` for dyadic `x₀ = p/2^k`; for `x₀ = p/(2^k q)` with odd
/// `q > 1`, the cycle of `r ↦ 2r mod q` through `p mod q`, in orbit order.
pub fn cluster_set(point: Point) -> Result<ClusterSet> {
    let x = match point {
        Point::Irrational => return Ok(ClusterSet::FullInterval),
        Point::Rational(x) => x,
    };
    let q = odd_part(*x.denom());
    if q == 1 {
        return Ok(ClusterSet::Finite(vec![Ratio::from_integer(0)]));
    }
    if q > MAX_CYCLE_MODULUS {
        return Err(GibbsError::InvalidInput(format!(
            "odd part {q} of the denominator exceeds {MAX_CYCLE_MODULUS}"
        )));
    }
    // 2ⁿ·p/(2^k q) ≡ 2^{n−k}p mod q for n ≥ k; 2 is invertible mod q, so
    // the tail is periodic and already contains the residue of p·2^{−k}.
    let k = x.denom().trailing_zeros();
    let mut r = x.numer().rem_euclid(q);
    for _ in 0..k {
        r = if r % 2 == 0 { r / 2 } else { (r + q) / 2 };
    }
    let start = r;
    let mut out = Vec::new();
    loop {
        out.push(Ratio::new(r, q));
        r = (2 * r) % q;
        if r == start {
            break;
        }
    }
    Ok(ClusterSet::Finite(out))
}

/// `⟨2ⁿx₀⟩` computed exactly with modular exponentiation.
pub fn orbit_point(x: Ratio<i64>, n: u64) -> Ratio<i64> {
    let d = *x.denom() as i128;
    let mut base = 2i128 % d;
    let mut e = n;
    let mut acc = 1i128 % d;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % d;
        }
        base = base * base % d;
        e >>= 1;
    }
    let r = (acc * (*x.numer() as i128)).rem_euclid(d);
    Ratio::new(r as i64, d as i64)
}

/// Gibbs verdict at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Gibbs,
    NoGibbs,
    Inconclusive,
}

/// Parameters of [`gibbs_at_point`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbsOptions {
    /// Decision tolerance `τ`.
    pub tau: f64,
    pub level: u32,
    /// Uniform sample count of `[0, 1)` for irrational points.
    pub density: usize,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        GibbsOptions {
            tau: 1e-3,
            level: 12,
            density: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GibbsReport {
    pub point: Point,
    #[serde(rename = "R_x0")]
    pub r_x0: f64,
    #[serde(rename = "L_x0")]
    pub l_x0: f64,
    pub cluster_set: ClusterSet,
    pub verdict: Verdict,
    pub overshoot_right: f64,
    pub overshoot_left: f64,
    /// Largest `sup |Q_{0,c} sgn − sgn|` over the evaluated `c`.
    pub sgn_deviation: f64,
    /// `Q sgn ≠ sgn` was observed on the grid.
    pub sgn_cond_confirmed: bool,
    pub tau: f64,
    pub level: u32,
}

/// `R_{x₀} = max_{c ∈ S_{x₀}} R(c)`, `L_{x₀} = min_{c ∈ S_{x₀}} L(c)` and
/// the resulting verdict.
///
/// Non-dyadic points require a continuous `φ`. Irrational points are
/// swept on a uniform grid of `[0, 1)` and never yield `no-gibbs`.
pub fn gibbs_at_point(pair: &QuasiProjectionPair, point: Point, opts: &GibbsOptions) -> Result<GibbsReport> {
    let qp1 = check_qp1(pair);
    if !qp1.ok {
        return Err(GibbsError::Precondition(format!(
            "pair fails Q1 = 1 (normalization residual {:.3e}, partition residual {:.3e})",
            qp1.normalization_residual, qp1.partition_residual
        )));
    }
    let cs = cluster_set(point)?;
    let dyadic = cs == ClusterSet::Finite(vec![Ratio::from_integer(0)]);
    if !dyadic && !pair.phi().is_continuous() {
        return Err(GibbsError::Precondition(
            "φ must be continuous at non-dyadic points".into(),
        ));
    }
    if opts.density == 0 {
        return Err(GibbsError::InvalidInput("sweep density must be positive".into()));
    }
    let curves: Vec<Overshoot> = cs
        .sample_points(opts.density)
        .into_par_iter()
        .map(|c| overshoot(pair, c, opts.level))
        .collect::<Result<_>>()?;
    let r = curves.iter().map(|o| o.r).fold(f64::NEG_INFINITY, f64::max);
    let l = curves.iter().map(|o| o.l).fold(f64::INFINITY, f64::min);
    let dev = curves.iter().map(|o| o.sgn_deviation).fold(0.0, f64::max);
    let gibbs = r > 1.0 + opts.tau || l < -1.0 - opts.tau;
    let verdict = match (gibbs, point) {
        (true, _) => Verdict::Gibbs,
        (false, Point::Irrational) => Verdict::Inconclusive,
        (false, Point::Rational(_)) => Verdict::NoGibbs,
    };
    Ok(GibbsReport {
        point,
        r_x0: r,
        l_x0: l,
        cluster_set: cs,
        verdict,
        overshoot_right: r - 1.0,
        overshoot_left: -l - 1.0,
        sgn_deviation: dev,
        sgn_cond_confirmed: dev > SGN_COND_TOL,
        tau: opts.tau,
        level: opts.level,
    })
}

/// Sign conditions sufficient for the absence of overshoot at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NonnegReport {
    /// `φ ≥ 0` and every half-line integral of `φ̃` at integers is `≥ 0`.
    pub item_i: bool,
    /// `φ ≥ 0` and `φ̃ ≥ 0`.
    pub item_ii: bool,
}

pub fn nonneg_sufficient(pair: &QuasiProjectionPair, level: u32) -> NonnegReport {
    let phi_ok = pair.phi().min_value(level) >= -NONNEG_TOL;
    let pt = pair.phi_tilde();
    let (a, b) = pt.support();
    let halflines = (a.floor() as i64..=b.ceil() as i64).all(|k| {
        let k = k as f64;
        pt.halfline_integral(k, Side::Left)
            .into_iter()
            .chain(pt.halfline_integral(k, Side::Right))
            .all(|v| v >= -NONNEG_TOL)
    });
    NonnegReport {
        item_i: phi_ok && halflines,
        item_ii: phi_ok && pt.min_value(level) >= -NONNEG_TOL,
    }
}

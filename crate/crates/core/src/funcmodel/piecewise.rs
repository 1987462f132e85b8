use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::Poly;
use super::quadrature::standard_rule;
use crate::error::{GibbsError, Result};

/// Highest polynomial degree allowed on a single interval.
pub const MAX_DEGREE: usize = 8;

/// Vector function that is polynomial on each `[xᵢ, xᵢ₊₁)` and zero
/// outside `[x₀, x_last)`.
///
/// Piece polynomials are stored in the local variable `x − xᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewisePolyJson", into = "PiecewisePolyJson")]
pub struct PiecewisePoly {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<Poly>>,
}

#[derive(Serialize, Deserialize)]
struct PiecewisePolyJson {
    breakpoints: Vec<f64>,
    coeffs: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<PiecewisePolyJson> for PiecewisePoly {
    type Error = GibbsError;
    fn try_from(j: PiecewisePolyJson) -> Result<Self> {
        PiecewisePoly::new(j.breakpoints, j.coeffs)
    }
}

impl From<PiecewisePoly> for PiecewisePolyJson {
    fn from(p: PiecewisePoly) -> Self {
        PiecewisePolyJson {
            breakpoints: p.breakpoints.clone(),
            coeffs: p.coeffs(),
        }
    }
}

fn merge_breaks(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if (x - last).abs() <= 1e-12 * last.abs().max(1.0) => {}
            _ => out.push(x),
        }
    }
    out
}

impl PiecewisePoly {
    /// `coeffs[i][c]` holds the local coefficients of component `c` on
    /// interval `i`.
    pub fn new(breakpoints: Vec<f64>, coeffs: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(GibbsError::InvalidInput(
                "piecewise polynomial needs at least two breakpoints".into(),
            ));
        }
        if breakpoints.iter().any(|x| !x.is_finite())
            || breakpoints.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(GibbsError::InvalidInput(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if coeffs.len() != breakpoints.len() - 1 {
            return Err(GibbsError::DimensionMismatch(format!(
                "{} intervals but {} coefficient blocks",
                breakpoints.len() - 1,
                coeffs.len()
            )));
        }
        let r = coeffs[0].len();
        if r == 0 || coeffs.iter().any(|c| c.len() != r) {
            return Err(GibbsError::DimensionMismatch(
                "every interval needs the same positive number of components".into(),
            ));
        }
        if coeffs.iter().flatten().any(|p| p.len() > MAX_DEGREE + 1) {
            return Err(GibbsError::InvalidInput(format!(
                "polynomial degree exceeds {MAX_DEGREE}"
            )));
        }
        if coeffs.iter().flatten().flatten().any(|c| !c.is_finite()) {
            return Err(GibbsError::InvalidInput("non-finite coefficient".into()));
        }
        let pieces = coeffs
            .into_iter()
            .map(|block| block.into_iter().map(Poly).collect())
            .collect();
        Ok(PiecewisePoly {
            breakpoints,
            pieces,
        })
    }

    fn from_parts(breakpoints: Vec<f64>, pieces: Vec<Vec<Poly>>) -> Self {
        let mut p = PiecewisePoly {
            breakpoints,
            pieces,
        };
        p.trim();
        p
    }

    fn trim(&mut self) {
        let is_zero = |block: &Vec<Poly>| block.iter().all(|q| q.is_zero());
        while self.pieces.len() > 1 && is_zero(self.pieces.last().unwrap()) {
            self.pieces.pop();
            self.breakpoints.pop();
        }
        while self.pieces.len() > 1 && is_zero(&self.pieces[0]) {
            self.pieces.remove(0);
            self.breakpoints.remove(0);
        }
        for block in &mut self.pieces {
            for q in block.iter_mut() {
                *q = q.trimmed();
            }
        }
    }

    /// Indicator of `[a, b)` (a single constant piece).
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        PiecewisePoly::new(vec![a, b], vec![vec![vec![1.0]]])
    }

    /// Scalar piecewise constant with the given values.
    pub fn piecewise_constant(breakpoints: Vec<f64>, values: &[f64]) -> Result<Self> {
        let coeffs = values.iter().map(|&v| vec![vec![v]]).collect();
        PiecewisePoly::new(breakpoints, coeffs)
    }

    pub fn components(&self) -> usize {
        self.pieces[0].len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn intervals(&self) -> usize {
        self.pieces.len()
    }

    /// Local coefficients as `coeffs[interval][component]`.
    pub fn coeffs(&self) -> Vec<Vec<Vec<f64>>> {
        self.pieces
            .iter()
            .map(|b| b.iter().map(|q| q.0.clone()).collect())
            .collect()
    }

    pub fn piece(&self, i: usize, c: usize) -> &Poly {
        &self.pieces[i][c]
    }

    pub fn max_degree(&self) -> usize {
        self.pieces
            .iter()
            .flatten()
            .map(|q| q.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    fn locate(&self, x: f64) -> Option<usize> {
        let (a, b) = self.support();
        if !(a..b).contains(&x) {
            return None;
        }
        let i = self.breakpoints.partition_point(|&bp| bp <= x);
        Some(i - 1)
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        match self.locate(x) {
            Some(i) => {
                let t = x - self.breakpoints[i];
                self.pieces[i].iter().map(|q| q.eval(t)).collect()
            }
            None => vec![0.0; self.components()],
        }
    }

    pub fn eval_component(&self, x: f64, c: usize) -> f64 {
        match self.locate(x) {
            Some(i) => self.pieces[i][c].eval(x - self.breakpoints[i]),
            None => 0.0,
        }
    }

    /// `Σ_c w_c f_c(x)`.
    pub fn dot_eval(&self, x: f64, w: &[f64]) -> f64 {
        match self.locate(x) {
            Some(i) => {
                let t = x - self.breakpoints[i];
                self.pieces[i]
                    .iter()
                    .zip(w)
                    .map(|(q, wc)| if *wc == 0.0 { 0.0 } else { wc * q.eval(t) })
                    .sum()
            }
            None => 0.0,
        }
    }

    /// Polynomials on `[u, v]` recentered at `u`; `[u, v]` must lie within
    /// one interval or outside the support.
    fn local(&self, u: f64, v: f64) -> Vec<Poly> {
        match self.locate(0.5 * (u + v)) {
            Some(i) => {
                let d = u - self.breakpoints[i];
                self.pieces[i].iter().map(|q| q.shift(d)).collect()
            }
            None => vec![Poly::zero(); self.components()],
        }
    }

    /// `∫_a^b f`.
    pub fn integral(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.components()];
        if b <= a {
            return out;
        }
        for (i, block) in self.pieces.iter().enumerate() {
            let (x0, x1) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let lo = a.max(x0);
            let hi = b.min(x1);
            if hi <= lo {
                continue;
            }
            for (o, q) in out.iter_mut().zip(block) {
                *o += q.integral(lo - x0, hi - x0);
            }
        }
        out
    }

    pub fn total_integral(&self) -> Vec<f64> {
        let (a, b) = self.support();
        self.integral(a, b)
    }

    /// `∫ x^j f(x) dx`.
    pub fn moment(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.components()];
        for (i, block) in self.pieces.iter().enumerate() {
            let x0 = self.breakpoints[i];
            let w = self.breakpoints[i + 1] - x0;
            let xj = Poly::monomial(j).shift(x0);
            for (o, q) in out.iter_mut().zip(block) {
                *o += xj.mul(q).integral(0.0, w);
            }
        }
        out
    }

    /// `∫ (−ix)^j f(x) e^{−iωx} dx`.
    pub fn fourier_deriv(&self, j: usize, omega: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.components()];
        let (gx, gw) = standard_rule();
        for (i, block) in self.pieces.iter().enumerate() {
            let x0 = self.breakpoints[i];
            let w = self.breakpoints[i + 1] - x0;
            let xj = Poly::monomial(j).shift(x0);
            let phase = Complex64::from_polar(1.0, -omega * x0);
            for (o, q) in out.iter_mut().zip(block) {
                let r = xj.mul(q);
                let val = if omega == 0.0 {
                    Complex64::new(r.integral(0.0, w), 0.0)
                } else if (omega * w).abs() <= 2.0 {
                    gx.iter()
                        .zip(gw)
                        .map(|(&s, &ws)| {
                            let t = s * w;
                            Complex64::from_polar(ws * w * r.eval(t), -omega * t)
                        })
                        .sum()
                } else {
                    oscillatory_integral(&r, omega, w)
                };
                *o += phase * val;
            }
        }
        let factor = Complex64::new(0.0, -1.0).powu(j as u32);
        out.into_iter().map(|z| z * factor).collect()
    }

    /// `f(· − s)`.
    pub fn translate(&self, s: f64) -> PiecewisePoly {
        PiecewisePoly {
            breakpoints: self.breakpoints.iter().map(|x| x + s).collect(),
            pieces: self.pieces.clone(),
        }
    }

    /// `x ↦ f(a·x − b)` for `a > 0`.
    pub fn affine(&self, a: f64, b: f64) -> Result<PiecewisePoly> {
        if a <= 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(GibbsError::InvalidInput(format!(
                "affine map needs a positive finite dilation, got {a}"
            )));
        }
        Ok(PiecewisePoly {
            breakpoints: self.breakpoints.iter().map(|x| (x + b) / a).collect(),
            pieces: self
                .pieces
                .iter()
                .map(|block| block.iter().map(|q| q.dilate(a)).collect())
                .collect(),
        })
    }

    pub fn scale(&self, s: f64) -> PiecewisePoly {
        PiecewisePoly {
            breakpoints: self.breakpoints.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|block| block.iter().map(|q| q.scale(s)).collect())
                .collect(),
        }
    }

    /// `Σ_t M_t f_t` for matrices `M_t` of shape `out × components(f_t)`.
    pub fn combine(terms: &[(Vec<Vec<f64>>, PiecewisePoly)]) -> Result<PiecewisePoly> {
        let Some((m0, _)) = terms.first() else {
            return Err(GibbsError::InvalidInput("empty linear combination".into()));
        };
        let out_dim = m0.len();
        for (m, f) in terms {
            if m.len() != out_dim || m.iter().any(|row| row.len() != f.components()) {
                return Err(GibbsError::DimensionMismatch(format!(
                    "coefficient matrix does not map {} components to {out_dim}",
                    f.components()
                )));
            }
        }
        let bps = merge_breaks(
            terms
                .iter()
                .flat_map(|(_, f)| f.breakpoints.iter().copied())
                .collect(),
        );
        let mut pieces = Vec::with_capacity(bps.len() - 1);
        for w in bps.windows(2) {
            let mut block = vec![Poly::zero(); out_dim];
            for (m, f) in terms {
                let local = f.local(w[0], w[1]);
                for (o, row) in block.iter_mut().zip(m) {
                    for (coef, q) in row.iter().zip(&local) {
                        if *coef != 0.0 && !q.is_empty() {
                            *o = o.add(&q.scale(*coef));
                        }
                    }
                }
            }
            pieces.push(block);
        }
        Ok(PiecewisePoly::from_parts(bps, pieces))
    }

    fn cumulative_local(&self, u: f64, v: f64, totals: &[f64], cum: &[Vec<f64>]) -> Vec<Poly> {
        let (a, b) = self.support();
        if v <= a {
            return vec![Poly::zero(); self.components()];
        }
        if u >= b {
            return totals.iter().map(|&t| Poly::constant(t)).collect();
        }
        let i = self.locate(0.5 * (u + v)).expect("inside support");
        let d = u - self.breakpoints[i];
        self.pieces[i]
            .iter()
            .zip(&cum[i])
            .map(|(q, &c)| q.antiderivative().add(&Poly::constant(c)).shift(d))
            .collect()
    }

    /// `∫₀¹ f(· − t) dt`, the convolution with the indicator of `[0, 1]`.
    pub fn convolve_unit_box(&self) -> PiecewisePoly {
        let r = self.components();
        let mut cum = Vec::with_capacity(self.pieces.len());
        let mut run = vec![0.0; r];
        for (i, block) in self.pieces.iter().enumerate() {
            cum.push(run.clone());
            let w = self.breakpoints[i + 1] - self.breakpoints[i];
            for (acc, q) in run.iter_mut().zip(block) {
                *acc += q.integral(0.0, w);
            }
        }
        let totals = run;
        let bps = merge_breaks(
            self.breakpoints
                .iter()
                .flat_map(|&x| [x, x + 1.0])
                .collect(),
        );
        let pieces = bps
            .windows(2)
            .map(|w| {
                let hi = self.cumulative_local(w[0], w[1], &totals, &cum);
                let lo = self.cumulative_local(w[0] - 1.0, w[1] - 1.0, &totals, &cum);
                hi.iter()
                    .zip(&lo)
                    .map(|(p, q)| p.add(&q.scale(-1.0)))
                    .collect()
            })
            .collect();
        PiecewisePoly::from_parts(bps, pieces)
    }

    /// `⟨f, g(· − s)⟩` as an `r × r'` matrix, exact up to rounding.
    pub fn inner_product(&self, g: &PiecewisePoly, s: f64) -> Vec<Vec<f64>> {
        let gs = g.translate(s);
        let mut out = vec![vec![0.0; g.components()]; self.components()];
        let (a0, b0) = self.support();
        let (a1, b1) = gs.support();
        let (lo, hi) = (a0.max(a1), b0.min(b1));
        if hi <= lo {
            return out;
        }
        let bps = merge_breaks(
            self.breakpoints
                .iter()
                .chain(gs.breakpoints.iter())
                .copied()
                .filter(|&x| x >= lo && x <= hi)
                .chain([lo, hi])
                .collect(),
        );
        for w in bps.windows(2) {
            let fp = self.local(w[0], w[1]);
            let gp = gs.local(w[0], w[1]);
            for (row, p) in out.iter_mut().zip(&fp) {
                for (cell, q) in row.iter_mut().zip(&gp) {
                    *cell += p.mul(q).integral(0.0, w[1] - w[0]);
                }
            }
        }
        out
    }

    /// `∫ h(z) f(z) dz` with Gauss–Legendre panels, split at `breaks`.
    pub fn integrate_against(&self, h: &dyn Fn(f64) -> f64, breaks: &[f64], max_panel: f64) -> Vec<f64> {
        let (a, b) = self.support();
        let bps = merge_breaks(
            self.breakpoints
                .iter()
                .copied()
                .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
                .collect(),
        );
        let (gx, gw) = standard_rule();
        let mut out = vec![0.0; self.components()];
        for w in bps.windows(2) {
            let local = self.local(w[0], w[1]);
            let len = w[1] - w[0];
            let panels = ((len / max_panel).ceil() as usize).max(1);
            let ph = len / panels as f64;
            for p in 0..panels {
                let t0 = p as f64 * ph;
                for (&s, &ws) in gx.iter().zip(gw) {
                    let t = t0 + s * ph;
                    let hv = h(w[0] + t) * ws * ph;
                    if hv == 0.0 {
                        continue;
                    }
                    for (o, q) in out.iter_mut().zip(&local) {
                        *o += hv * q.eval(t);
                    }
                }
            }
        }
        out
    }

    /// Largest jump at a breakpoint, counting the outer ends against zero.
    pub fn continuity_defect(&self) -> f64 {
        let n = self.pieces.len();
        let mut worst = 0.0f64;
        for i in 0..=n {
            for c in 0..self.components() {
                let left = if i == 0 {
                    0.0
                } else {
                    let w = self.breakpoints[i] - self.breakpoints[i - 1];
                    self.pieces[i - 1][c].eval(w)
                };
                let right = if i == n { 0.0 } else { self.pieces[i][c].eval(0.0) };
                worst = worst.max((left - right).abs());
            }
        }
        worst
    }

    /// Minimum over all components at the breakpoints (both one-sided
    /// limits) and on the dyadic grid of the given level.
    pub fn min_value(&self, level: u32) -> f64 {
        let h = (-(level as f64)).exp2();
        let mut m = f64::INFINITY;
        for (i, block) in self.pieces.iter().enumerate() {
            let x0 = self.breakpoints[i];
            let w = self.breakpoints[i + 1] - x0;
            let first = (x0 / h).ceil() * h;
            let mut ts: Vec<f64> = vec![0.0, w];
            let mut x = first;
            while x < x0 + w {
                ts.push(x - x0);
                x += h;
            }
            for q in block {
                for &t in &ts {
                    m = m.min(q.eval(t));
                }
            }
        }
        m
    }

    /// Largest absolute value over the same point set as [`Self::min_value`].
    pub fn max_abs(&self, level: u32) -> f64 {
        self.scale(-1.0).min_value(level).abs().max(self.min_value(level).abs())
    }
}

/// `∫_0^w r(t) e^{−iωt} dt` by repeated integration by parts, `ω ≠ 0`.
fn oscillatory_integral(r: &Poly, omega: f64, w: f64) -> Complex64 {
    let iw = Complex64::new(0.0, omega);
    let antider = |t: f64| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut d = r.clone();
        let mut denom = iw;
        while !d.is_empty() {
            acc += d.eval(t) / denom;
            d = d.derivative();
            denom *= iw;
        }
        -Complex64::from_polar(1.0, -omega * t) * acc
    };
    antider(w) - antider(0.0)
}

/// The B-spline `B_m` on `[0, m]`, `1 ≤ m ≤ 9`.
pub fn bspline(m: usize) -> Result<PiecewisePoly> {
    if !(1..=MAX_DEGREE + 1).contains(&m) {
        return Err(GibbsError::InvalidInput(format!(
            "B-spline order {m} outside 1..=9"
        )));
    }
    let mut b = PiecewisePoly::indicator(0.0, 1.0)?;
    for _ in 1..m {
        b = b.convolve_unit_box();
    }
    Ok(b)
}

/// The scalar refinement mask of `B_m`: `a(k) = 2^{−m} C(m, k)`.
pub fn bspline_mask_coeffs(m: usize) -> Vec<f64> {
    let mut c = vec![1.0];
    for _ in 0..m {
        let mut next = vec![0.0; c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i] += 0.5 * v;
            next[i + 1] += 0.5 * v;
        }
        c = next;
    }
    c
}

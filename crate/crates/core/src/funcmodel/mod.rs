//! Compactly supported vector functions: exact piecewise polynomials,
//! refinable functions evaluated by the cascade, and plain samples.

pub mod piecewise;
pub mod poly;
pub mod quadrature;
pub mod refinable;
pub mod sampled;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GibbsError, Result};
use crate::sequences::MatrixSeq;

pub use piecewise::{bspline, bspline_mask_coeffs, PiecewisePoly};
pub use poly::Poly;
pub use refinable::{cascade, cascade_with, daubechies_mask, CascadeOptions, RefinableFunction};
pub use sampled::SampledFunction;

/// Which half-line a half-line integral covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `(−∞, k]`
    Left,
    /// `[k, ∞)`
    Right,
}

/// Relative jump size above which sampled functions count as discontinuous.
pub const CONTINUITY_JUMP_TOL: f64 = 0.1;

/// A compactly supported vector function in one of three representations.
#[derive(Clone, Debug)]
pub enum FunctionHandle {
    Poly(Arc<PiecewisePoly>),
    Refinable(Arc<RefinableFunction>),
    Sampled(Arc<SampledFunction>),
}

impl From<PiecewisePoly> for FunctionHandle {
    fn from(p: PiecewisePoly) -> Self {
        FunctionHandle::Poly(Arc::new(p))
    }
}

impl From<RefinableFunction> for FunctionHandle {
    fn from(r: RefinableFunction) -> Self {
        FunctionHandle::Refinable(Arc::new(r))
    }
}

impl From<SampledFunction> for FunctionHandle {
    fn from(s: SampledFunction) -> Self {
        FunctionHandle::Sampled(Arc::new(s))
    }
}

impl FunctionHandle {
    /// Refinable function from a mask, evaluated at the given level.
    pub fn refinable(mask: MatrixSeq, normalization: Vec<f64>, level: u32) -> Result<Self> {
        Ok(RefinableFunction::new(mask, normalization, level)?.into())
    }

    fn samples(&self) -> Option<&SampledFunction> {
        match self {
            FunctionHandle::Poly(_) => None,
            FunctionHandle::Refinable(r) => Some(r.samples()),
            FunctionHandle::Sampled(s) => Some(s),
        }
    }

    /// Exact representation, if any.
    pub fn as_poly(&self) -> Option<&PiecewisePoly> {
        match self {
            FunctionHandle::Poly(p) => Some(p),
            _ => None,
        }
    }

    /// Level and origin of the sample grid for grid-based variants.
    pub fn sample_grid(&self) -> Option<(u32, f64)> {
        self.samples().map(|s| (s.level(), s.origin()))
    }

    pub fn components(&self) -> usize {
        match self {
            FunctionHandle::Poly(p) => p.components(),
            _ => self.samples().unwrap().components(),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            FunctionHandle::Poly(p) => p.support(),
            _ => self.samples().unwrap().support(),
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        match self {
            FunctionHandle::Poly(p) => p.eval(x),
            _ => self.samples().unwrap().eval(x),
        }
    }

    pub fn eval_component(&self, x: f64, c: usize) -> f64 {
        match self {
            FunctionHandle::Poly(p) => p.eval_component(x, c),
            _ => self.samples().unwrap().eval_component(x, c),
        }
    }

    /// `Σ_c w_c f_c(x)`.
    pub fn dot_eval(&self, x: f64, w: &[f64]) -> f64 {
        match self {
            FunctionHandle::Poly(p) => p.dot_eval(x, w),
            _ => self.samples().unwrap().dot_eval(x, w),
        }
    }

    /// `∫ x^j f(x) dx`: exact for piecewise polynomials, trapezoid on the
    /// sample grid otherwise.
    pub fn moment(&self, j: usize) -> Vec<f64> {
        match self {
            FunctionHandle::Poly(p) => p.moment(j),
            _ => self.samples().unwrap().moment(j),
        }
    }

    /// `f̂^{(j)}(0) = (−i)^j ∫ x^j f`.
    pub fn fhat_deriv0(&self, j: usize) -> Vec<Complex64> {
        let f = Complex64::new(0.0, -1.0).powu(j as u32);
        self.moment(j).into_iter().map(|m| f * m).collect()
    }

    /// `∫_a^b f`.
    pub fn integral(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            FunctionHandle::Poly(p) => p.integral(a, b),
            _ => self.samples().unwrap().integral(a, b),
        }
    }

    pub fn total_integral(&self) -> Vec<f64> {
        let (a, b) = self.support();
        self.integral(a, b)
    }

    /// `∫_{−∞}^k f` or `∫_k^∞ f`.
    pub fn halfline_integral(&self, k: f64, side: Side) -> Vec<f64> {
        let (a, b) = self.support();
        match side {
            Side::Left => self.integral(a, k),
            Side::Right => self.integral(k, b),
        }
    }

    /// `f(· − s)`.
    pub fn translate(&self, s: f64) -> FunctionHandle {
        match self {
            FunctionHandle::Poly(p) => p.translate(s).into(),
            _ => self.samples().unwrap().translate(s).into(),
        }
    }

    /// `∫ h(z) f(z) dz`; `breaks` lists discontinuities of `h`.
    pub fn integrate_against(&self, h: &dyn Fn(f64) -> f64, breaks: &[f64]) -> Vec<f64> {
        match self {
            FunctionHandle::Poly(p) => p.integrate_against(h, breaks, 0.25),
            _ => self.samples().unwrap().integrate_against(h),
        }
    }

    /// `⟨f, g(· − s)⟩` as a `components(f) × components(g)` matrix.
    pub fn inner_product(&self, g: &FunctionHandle, s: f64) -> Vec<Vec<f64>> {
        if let (Some(p), Some(q)) = (self.as_poly(), g.as_poly()) {
            return p.inner_product(q, s);
        }
        let gs = g.translate(s);
        // Quadrature on the finer of the two sample grids.
        let (level, origin) = match (self.sample_grid(), gs.sample_grid()) {
            (Some(a), Some(b)) => {
                if a.0 >= b.0 {
                    a
                } else {
                    b
                }
            }
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => unreachable!(),
        };
        let (a0, b0) = self.support();
        let (a1, b1) = gs.support();
        let (lo, hi) = (a0.max(a1), b0.min(b1));
        let mut out = vec![vec![0.0; gs.components()]; self.components()];
        if hi <= lo {
            return out;
        }
        let h = (-(level as f64)).exp2();
        let j0 = ((lo - origin) / h).floor() as i64;
        let j1 = ((hi - origin) / h).ceil() as i64;
        for j in j0..=j1 {
            let x = origin + j as f64 * h;
            let w = if j == j0 || j == j1 { 0.5 * h } else { h };
            let fv = self.eval(x);
            let gv = gs.eval(x);
            for (row, a) in out.iter_mut().zip(&fv) {
                for (cell, b) in row.iter_mut().zip(&gv) {
                    *cell += w * a * b;
                }
            }
        }
        out
    }

    /// `f̂(ξ)`: exact for piecewise polynomials, the infinite product for
    /// refinable functions, trapezoid quadrature for samples.
    pub fn fourier_transform(&self, xi: f64) -> Vec<Complex64> {
        match self {
            FunctionHandle::Poly(p) => p.fourier_deriv(0, xi),
            FunctionHandle::Refinable(r) => r.fourier_transform(xi),
            FunctionHandle::Sampled(_) => self.fourier_deriv(0, xi),
        }
    }

    /// `f̂^{(j)}(ξ) = ∫ (−ix)^j f(x) e^{−ixξ} dx`.
    pub fn fourier_deriv(&self, j: usize, xi: f64) -> Vec<Complex64> {
        match self {
            FunctionHandle::Poly(p) => p.fourier_deriv(j, xi),
            _ => {
                let re = self.integrate_against(&|x| x.powi(j as i32) * (xi * x).cos(), &[]);
                let im = self.integrate_against(&|x| -x.powi(j as i32) * (xi * x).sin(), &[]);
                let f = Complex64::new(0.0, -1.0).powu(j as u32);
                re.into_iter()
                    .zip(im)
                    .map(|(a, b)| f * Complex64::new(a, b))
                    .collect()
            }
        }
    }

    /// Continuity test: exact jump check for piecewise polynomials; for
    /// samples, neighbouring values must differ by less than
    /// [`CONTINUITY_JUMP_TOL`] relative to the sup norm.
    pub fn is_continuous(&self) -> bool {
        match self {
            FunctionHandle::Poly(p) => p.continuity_defect() < 1e-9,
            _ => {
                let s = self.samples().unwrap();
                s.max_jump() < CONTINUITY_JUMP_TOL * s.max_abs().max(1e-300)
            }
        }
    }

    /// Minimum over all components (grid of the given level for piecewise
    /// polynomials, the samples otherwise).
    pub fn min_value(&self, level: u32) -> f64 {
        match self {
            FunctionHandle::Poly(p) => p.min_value(level),
            _ => self.samples().unwrap().min_value(),
        }
    }

    /// `x ↦ Σ_k M_k f(d·x − k)` for dilation `d ∈ {1, 2}` and real
    /// matrices `M_k` of shape `out × components(f)`.
    ///
    /// Sampled inputs stay exact: for `d = 2` the result lives on the grid
    /// one level finer.
    pub fn refine_combine(&self, dilation: u32, terms: &[(i64, Vec<Vec<f64>>)]) -> Result<FunctionHandle> {
        if dilation != 1 && dilation != 2 {
            return Err(GibbsError::InvalidInput(format!(
                "dilation {dilation} not supported"
            )));
        }
        let Some((_, m0)) = terms.first() else {
            return Err(GibbsError::InvalidInput("empty linear combination".into()));
        };
        let out_dim = m0.len();
        let r = self.components();
        if terms
            .iter()
            .any(|(_, m)| m.len() != out_dim || m.iter().any(|row| row.len() != r))
        {
            return Err(GibbsError::DimensionMismatch(format!(
                "coefficient matrices must be {out_dim}x{r}"
            )));
        }
        let d = dilation as f64;
        if let Some(p) = self.as_poly() {
            let parts = terms
                .iter()
                .map(|(k, m)| Ok((m.clone(), p.affine(d, *k as f64)?)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(PiecewisePoly::combine(&parts)?.into());
        }
        let s = self.samples().unwrap();
        let level = s.level() + dilation - 1;
        let h = (-(level as f64)).exp2();
        let kmin = terms.iter().map(|(k, _)| *k).min().unwrap();
        let kmax = terms.iter().map(|(k, _)| *k).max().unwrap();
        let (a, b) = s.support();
        let lo = (a + kmin as f64) / d;
        let hi = (b + kmax as f64) / d;
        let n = ((hi - lo) / h).round() as usize + 1;
        let mut values = vec![vec![0.0; n]; out_dim];
        for j in 0..n {
            let x = lo + j as f64 * h;
            for (k, m) in terms {
                let v = s.eval(d * x - *k as f64);
                for (out, row) in values.iter_mut().zip(m) {
                    out[j] += row.iter().zip(&v).map(|(c, f)| c * f).sum::<f64>();
                }
            }
        }
        Ok(SampledFunction::new(level, lo, values)?.into())
    }
}

/// Serializable description of a function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Poly(PiecewisePoly),
    Refinable {
        mask: MatrixSeq,
        level: u32,
        #[serde(default)]
        normalization: Option<Vec<f64>>,
    },
    Sampled {
        level: u32,
        origin: f64,
        values: Vec<Vec<f64>>,
    },
}

impl FunctionSpec {
    pub fn build(self) -> Result<FunctionHandle> {
        match self {
            FunctionSpec::Poly(p) => Ok(p.into()),
            FunctionSpec::Refinable {
                mask,
                level,
                normalization,
            } => {
                let norm = match normalization {
                    Some(n) => n,
                    None if mask.shape() == (1, 1) => vec![1.0],
                    None => {
                        return Err(GibbsError::InvalidInput(
                            "vector masks need an explicit normalization".into(),
                        ))
                    }
                };
                FunctionHandle::refinable(mask, norm, level)
            }
            FunctionSpec::Sampled {
                level,
                origin,
                values,
            } => Ok(SampledFunction::new(level, origin, values)?.into()),
        }
    }
}

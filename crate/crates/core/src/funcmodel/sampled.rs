use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{GibbsError, Result};

/// Largest supported grid level.
pub const MAX_LEVEL: u32 = 24;

/// Vector function given by samples on `origin + 2^{−level}·j`,
/// `j = 0..len`, modelled as the piecewise-linear interpolant and zero
/// outside the sampled range.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledFunction {
    level: u32,
    origin: f64,
    values: Vec<Vec<f64>>,
    #[serde(skip)]
    prefix: OnceLock<Vec<Vec<f64>>>,
}

impl PartialEq for SampledFunction {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level && self.origin == other.origin && self.values == other.values
    }
}

impl SampledFunction {
    /// `values[c][j]` is component `c` at grid point `j`.
    pub fn new(level: u32, origin: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(GibbsError::InvalidInput(format!(
                "grid level {level} exceeds {MAX_LEVEL}"
            )));
        }
        if !origin.is_finite() {
            return Err(GibbsError::InvalidInput("non-finite grid origin".into()));
        }
        let n = values.first().map(|v| v.len()).unwrap_or(0);
        if n == 0 || values.iter().any(|v| v.len() != n) {
            return Err(GibbsError::DimensionMismatch(
                "sampled components must be non-empty and of equal length".into(),
            ));
        }
        Ok(SampledFunction {
            level,
            origin,
            values,
            prefix: OnceLock::new(),
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn step(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.values[0].is_empty()
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn x(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.step()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.origin, self.x(self.len() - 1))
    }

    /// Fractional grid coordinate of `x`, or `None` outside the samples.
    fn coord(&self, x: f64) -> Option<(usize, f64)> {
        let s = (x - self.origin) * (self.level as f64).exp2();
        let last = (self.len() - 1) as f64;
        if !(-1e-9..=last + 1e-9).contains(&s) {
            return None;
        }
        let s = s.clamp(0.0, last);
        let j = (s.floor() as usize).min(self.len() - 1);
        Some((j, s - j as f64))
    }

    fn lerp(&self, c: usize, j: usize, f: f64) -> f64 {
        let v = &self.values[c];
        if f == 0.0 || j + 1 >= v.len() {
            v[j]
        } else {
            v[j] + f * (v[j + 1] - v[j])
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        match self.coord(x) {
            Some((j, f)) => (0..self.components()).map(|c| self.lerp(c, j, f)).collect(),
            None => vec![0.0; self.components()],
        }
    }

    pub fn eval_component(&self, x: f64, c: usize) -> f64 {
        match self.coord(x) {
            Some((j, f)) => self.lerp(c, j, f),
            None => 0.0,
        }
    }

    pub fn dot_eval(&self, x: f64, w: &[f64]) -> f64 {
        match self.coord(x) {
            Some((j, f)) => w
                .iter()
                .enumerate()
                .map(|(c, wc)| if *wc == 0.0 { 0.0 } else { wc * self.lerp(c, j, f) })
                .sum(),
            None => 0.0,
        }
    }

    fn prefix(&self) -> &Vec<Vec<f64>> {
        self.prefix.get_or_init(|| {
            let h = self.step();
            self.values
                .iter()
                .map(|v| {
                    let mut p = Vec::with_capacity(v.len());
                    let mut acc = 0.0;
                    p.push(0.0);
                    for w in v.windows(2) {
                        acc += 0.5 * h * (w[0] + w[1]);
                        p.push(acc);
                    }
                    p
                })
                .collect()
        })
    }

    /// Integral of the interpolant from the first sample to `x`.
    fn cumulative(&self, c: usize, x: f64) -> f64 {
        let (a, b) = self.support();
        let p = &self.prefix()[c];
        if x <= a {
            return 0.0;
        }
        if x >= b {
            return *p.last().unwrap();
        }
        let (j, f) = self.coord(x).expect("inside support");
        let v = &self.values[c];
        let next = if j + 1 < v.len() { v[j + 1] } else { v[j] };
        p[j] + self.step() * (f * v[j] + 0.5 * f * f * (next - v[j]))
    }

    /// `∫_a^b` of the piecewise-linear interpolant.
    pub fn integral(&self, a: f64, b: f64) -> Vec<f64> {
        (0..self.components())
            .map(|c| {
                if b <= a {
                    0.0
                } else {
                    self.cumulative(c, b) - self.cumulative(c, a)
                }
            })
            .collect()
    }

    /// Trapezoid weights times samples, i.e. `∫ h(x) f(x) dx ≈ Σ_j w_j h(x_j) f(x_j)`.
    pub fn integrate_against(&self, h: &dyn Fn(f64) -> f64) -> Vec<f64> {
        let step = self.step();
        let n = self.len();
        let mut out = vec![0.0; self.components()];
        for j in 0..n {
            let w = if j == 0 || j + 1 == n { 0.5 * step } else { step };
            let hv = h(self.x(j));
            if hv == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&self.values) {
                *o += w * hv * v[j];
            }
        }
        out
    }

    /// Trapezoid moment `∫ x^j f(x) dx`.
    pub fn moment(&self, j: usize) -> Vec<f64> {
        self.integrate_against(&|x| x.powi(j as i32))
    }

    /// `f(· − s)`: the same samples on a shifted grid.
    pub fn translate(&self, s: f64) -> SampledFunction {
        SampledFunction {
            level: self.level,
            origin: self.origin + s,
            values: self.values.clone(),
            prefix: self.prefix.clone(),
        }
    }

    /// Largest difference between neighbouring samples, counting the two
    /// ends against zero.
    pub fn max_jump(&self) -> f64 {
        let mut worst = 0.0f64;
        for v in &self.values {
            worst = worst.max(v[0].abs()).max(v[v.len() - 1].abs());
            for w in v.windows(2) {
                worst = worst.max((w[1] - w[0]).abs());
            }
        }
        worst
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hat(level: u32) -> SampledFunction {
        let n = 2 * (1usize << level) + 1;
        let h = (-(level as f64)).exp2();
        let v = (0..n).map(|j| 1.0 - (j as f64 * h - 1.0).abs()).collect();
        SampledFunction::new(level, 0.0, vec![v]).unwrap()
    }

    #[test]
    fn interpolation_and_integrals() {
        let f = hat(3);
        assert_abs_diff_eq!(f.eval(0.3)[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval(2.5)[0], 0.0);
        assert_abs_diff_eq!(f.integral(-1.0, 5.0)[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.integral(0.0, 0.3)[0], 0.045, epsilon = 1e-15);
        assert_abs_diff_eq!(f.moment(1)[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn translation_is_exact() {
        let f = hat(4);
        let g = f.translate(0.25);
        assert_eq!(g.eval(1.25), f.eval(1.0));
        assert_abs_diff_eq!(g.integral(0.25, 1.25)[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SampledFunction::new(3, 0.0, vec![vec![]]).is_err());
        assert!(SampledFunction::new(3, 0.0, vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(SampledFunction::new(40, 0.0, vec![vec![1.0]]).is_err());
    }
}

use num_complex::Complex64;

use super::sampled::SampledFunction;
use crate::error::{GibbsError, Result};
use crate::linalg::CMat;
use crate::sequences::MatrixSeq;

/// Largest grid level accepted by the cascade.
pub const MAX_CASCADE_LEVEL: u32 = 16;

/// Stopping rule of the cascade iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadeOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        CascadeOptions {
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

fn real_mask(mask: &MatrixSeq) -> Result<Vec<(i64, Vec<Vec<f64>>)>> {
    let (r, c) = mask.shape();
    if r != c {
        return Err(GibbsError::DimensionMismatch(format!(
            "refinement mask must be square, got {r}x{c}"
        )));
    }
    if mask.is_zero() {
        return Err(GibbsError::InvalidInput("zero refinement mask".into()));
    }
    if mask.max_imag() > 1e-14 {
        return Err(GibbsError::InvalidInput(
            "the cascade supports real masks only".into(),
        ));
    }
    Ok(mask.real_entries())
}

fn check_eigen(mask: &MatrixSeq, normalization: &[f64]) -> Result<()> {
    let r = mask.shape().0;
    if normalization.len() != r {
        return Err(GibbsError::DimensionMismatch(format!(
            "normalization of length {} for a {r}x{r} mask",
            normalization.len()
        )));
    }
    if normalization.iter().all(|v| *v == 0.0) {
        return Err(GibbsError::Precondition("zero normalization vector".into()));
    }
    let a0 = mask.sum();
    let v = CMat::from_real(r, 1, normalization);
    let res = a0.matmul(&v).sub(&v).max_abs();
    if res > 1e-10 {
        return Err(GibbsError::Precondition(format!(
            "normalization is not a 1-eigenvector of â(0) (residual {res:e})"
        )));
    }
    Ok(())
}

/// Samples of the refinable `φ = 2 Σ_k a(k) φ(2· − k)` with `φ̂(0)` equal to
/// `normalization`, on the level-`level` grid over the mask support.
pub fn cascade(mask: &MatrixSeq, normalization: &[f64], level: u32) -> Result<SampledFunction> {
    cascade_with(mask, normalization, level, &CascadeOptions::default())
}

pub fn cascade_with(
    mask: &MatrixSeq,
    normalization: &[f64],
    level: u32,
    opts: &CascadeOptions,
) -> Result<SampledFunction> {
    if level > MAX_CASCADE_LEVEL {
        return Err(GibbsError::InvalidInput(format!(
            "cascade level {level} exceeds {MAX_CASCADE_LEVEL}"
        )));
    }
    let taps = real_mask(mask)?;
    check_eigen(mask, normalization)?;
    let r = normalization.len();
    let (kmin, kmax) = (mask.offset(), mask.last_index());
    let scale = 1i64 << level;
    let n = ((kmax - kmin) * scale + 1) as usize;
    let h = 1.0 / scale as f64;

    let center = (kmin + kmax).div_euclid(2) as f64;
    let mut v: Vec<Vec<f64>> = normalization
        .iter()
        .map(|&nc| {
            (0..n)
                .map(|j| nc * (1.0 - (kmin as f64 + j as f64 * h - center).abs()).max(0.0))
                .collect()
        })
        .collect();

    let mut next = vec![vec![0.0; n]; r];
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        for row in next.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        for (k, ak) in &taps {
            // 2x_j − k lands on index 2j + (kmin − k)·2^L.
            let base = (kmin - k) * scale;
            for j in 0..n {
                let idx = 2 * j as i64 + base;
                if idx < 0 || idx >= n as i64 {
                    continue;
                }
                let idx = idx as usize;
                for (c, out) in next.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (d, vd) in v.iter().enumerate() {
                        s += ak[c][d] * vd[idx];
                    }
                    out[j] += 2.0 * s;
                }
            }
        }
        residual = next
            .iter()
            .zip(&v)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        if !residual.is_finite() {
            break;
        }
        if residual < opts.tolerance {
            return SampledFunction::new(level, kmin as f64, v);
        }
    }
    Err(GibbsError::NonConvergence {
        iterations: opts.max_iterations,
        residual,
    })
}

/// Refinable function: mask, normalization and its cascade samples.
#[derive(Clone, Debug)]
pub struct RefinableFunction {
    mask: MatrixSeq,
    normalization: Vec<f64>,
    samples: SampledFunction,
}

impl RefinableFunction {
    pub fn new(mask: MatrixSeq, normalization: Vec<f64>, level: u32) -> Result<Self> {
        Self::with_options(mask, normalization, level, &CascadeOptions::default())
    }

    pub fn with_options(
        mask: MatrixSeq,
        normalization: Vec<f64>,
        level: u32,
        opts: &CascadeOptions,
    ) -> Result<Self> {
        let samples = cascade_with(&mask, &normalization, level, opts)?;
        Ok(RefinableFunction {
            mask,
            normalization,
            samples,
        })
    }

    pub fn mask(&self) -> &MatrixSeq {
        &self.mask
    }

    pub fn normalization(&self) -> &[f64] {
        &self.normalization
    }

    pub fn level(&self) -> u32 {
        self.samples.level()
    }

    pub fn samples(&self) -> &SampledFunction {
        &self.samples
    }

    /// Integer support `[minsupp, maxsupp]`.
    pub fn support(&self) -> (i64, i64) {
        (self.mask.offset(), self.mask.last_index())
    }

    /// `sup_x |φ(x) − 2 Σ_k a(k) φ(2x − k)|` over the sample grid.
    pub fn refinement_residual(&self) -> f64 {
        let taps = self.mask.real_entries();
        let s = &self.samples;
        let mut worst = 0.0f64;
        for j in 0..s.len() {
            let x = s.x(j);
            let lhs = s.eval(x);
            let mut rhs = vec![0.0; lhs.len()];
            for (k, ak) in &taps {
                let v = s.eval(2.0 * x - *k as f64);
                for (c, out) in rhs.iter_mut().enumerate() {
                    *out += 2.0 * ak[c].iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            for (l, r) in lhs.iter().zip(&rhs) {
                worst = worst.max((l - r).abs());
            }
        }
        worst
    }

    /// `φ̂(ξ) = â(ξ/2) â(ξ/4) ⋯ φ̂(0)` truncated after 60 factors.
    pub fn fourier_transform(&self, xi: f64) -> Vec<Complex64> {
        let r = self.normalization.len();
        let mut v = CMat::from_real(r, 1, &self.normalization);
        for j in (1..=60).rev() {
            v = self.mask.fourier(xi / (j as f64).exp2()).matmul(&v);
        }
        (0..r).map(|i| v.get(i, 0)).collect()
    }
}

/// Orthonormal Daubechies scaling mask with `k` vanishing moments,
/// normalized to `Σ a = 1` (`k = 1` is the Haar mask).
pub fn daubechies_mask(k: usize) -> Result<MatrixSeq> {
    if !(1..=10).contains(&k) {
        return Err(GibbsError::InvalidInput(format!(
            "Daubechies order {k} outside 1..=10"
        )));
    }
    // |Q(e^{−iξ})|² = P(sin²(ξ/2)), P(y) = Σ_{j<k} C(k−1+j, j) y^j.
    let p: Vec<f64> = (0..k).map(|j| binomial(k - 1 + j, j)).collect();
    let roots = poly_roots(&p);
    // Each root y gives z with y = (2 − z − 1/z)/4; keep |z| > 1.
    let mut q = vec![Complex64::new(1.0, 0.0)];
    for y in roots {
        let b = Complex64::new(2.0, 0.0) - 4.0 * y;
        let disc = (b * b - 4.0).sqrt();
        let z1 = 0.5 * (b + disc);
        let z2 = 0.5 * (b - disc);
        let z = if z1.norm() > z2.norm() { z1 } else { z2 };
        q = poly_mul_complex(&q, &[-z, Complex64::new(1.0, 0.0)]);
    }
    for _ in 0..k {
        q = poly_mul_complex(&q, &[Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)]);
    }
    let total: Complex64 = q.iter().sum();
    let coeffs: Vec<f64> = q.iter().map(|c| (c / total).re).collect();
    Ok(MatrixSeq::scalar(0, &coeffs))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn poly_mul_complex(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn horner(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Roots of the real polynomial with ascending coefficients `c`
/// (Durand–Kerner iteration followed by Newton polishing).
fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<f64> = c.iter().map(|x| x / lead).collect();
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg).map(|i| seed.powu(i as u32)).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            let step = horner(&monic, z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    let dc: Vec<f64> = (1..=deg).map(|i| i as f64 * monic[i]).collect();
    for r in z.iter_mut() {
        for _ in 0..5 {
            let d = horner(&dc, *r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= horner(&monic, *r) / d;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::piecewise::{bspline, bspline_mask_coeffs};

    #[test]
    fn haar_cascade_is_left_closed_indicator() {
        let s = cascade(&MatrixSeq::scalar(0, &[0.5, 0.5]), &[1.0], 6).unwrap();
        assert_eq!(s.support(), (0.0, 1.0));
        for j in 0..s.len() {
            let expect = if s.x(j) < 1.0 { 1.0 } else { 0.0 };
            assert_eq!(s.values()[0][j], expect);
        }
    }

    #[test]
    fn spline_cascade_matches_exact() {
        for m in 2..=5 {
            let s = cascade(&MatrixSeq::scalar(0, &bspline_mask_coeffs(m)), &[1.0], 8).unwrap();
            let b = bspline(m).unwrap();
            let worst = (0..s.len())
                .map(|j| (s.values()[0][j] - b.eval(s.x(j))[0]).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-9, "m={m}: {worst:e}");
        }
    }

    #[test]
    fn d2_closed_form() {
        let a = daubechies_mask(2).unwrap();
        let s3 = 3f64.sqrt();
        let expect = [(1.0 + s3) / 8.0, (3.0 + s3) / 8.0, (3.0 - s3) / 8.0, (1.0 - s3) / 8.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((a.get(k as i64).get(0, 0).re - e).abs() < 1e-15);
        }
    }

    #[test]
    fn daubechies_orthonormality() {
        for k in 1..=8 {
            let a = daubechies_mask(k).unwrap();
            let c: Vec<f64> = a.entries().iter().map(|e| e.get(0, 0).re).collect();
            assert_eq!(c.len(), 2 * k);
            for shift in 0..k {
                let s: f64 = (0..c.len() - 2 * shift).map(|i| c[i] * c[i + 2 * shift]).sum();
                let expect = if shift == 0 { 0.5 } else { 0.0 };
                assert!((s - expect).abs() < 1e-13, "k={k} shift={shift}: {s}");
            }
            // k sum rules: Σ (−1)^n n^j a(n) = 0 for j < k.
            for j in 0..k {
                let s: f64 = c
                    .iter()
                    .enumerate()
                    .map(|(n, v)| if n % 2 == 0 { 1.0 } else { -1.0 } * (n as f64).powi(j as i32) * v)
                    .sum();
                assert!(s.abs() < 1e-11, "k={k} j={j}: {s}");
            }
        }
    }

    #[test]
    fn d2_refinement_residual() {
        let phi = RefinableFunction::new(daubechies_mask(2).unwrap(), vec![1.0], 12).unwrap();
        assert!(phi.refinement_residual() < 1e-8);
    }

    #[test]
    fn vector_cascade_diagonal_mask() {
        let c = bspline_mask_coeffs(2);
        let entries: Vec<Vec<f64>> = c.iter().map(|&v| vec![v, 0.0, 0.0, v]).collect();
        let mask = MatrixSeq::real(0, 2, 2, &entries).unwrap();
        let s = cascade(&mask, &[1.0, 2.0], 6).unwrap();
        let b2 = bspline(2).unwrap();
        for j in 0..s.len() {
            let e = b2.eval(s.x(j))[0];
            assert!((s.values()[0][j] - e).abs() < 1e-9);
            assert!((s.values()[1][j] - 2.0 * e).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_normalization_rejected() {
        let mask = MatrixSeq::scalar(0, &[0.5, 0.5]);
        assert!(matches!(
            cascade(&mask, &[1.0, 0.0], 4),
            Err(GibbsError::DimensionMismatch(_))
        ));
        let skew = MatrixSeq::scalar(0, &[0.6, 0.6]);
        assert!(matches!(cascade(&skew, &[1.0], 4), Err(GibbsError::Precondition(_))));
    }

    #[test]
    fn divergent_mask_reports_residual() {
        // Satisfies â(0) = 1 but has no L₂ solution.
        let mask = MatrixSeq::scalar(0, &[1.5, -1.0, 0.5]);
        match cascade(&mask, &[1.0], 6) {
            Err(GibbsError::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 200);
                assert!(residual > 1e-10);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn product_transform_matches_normalization() {
        let phi = RefinableFunction::new(daubechies_mask(3).unwrap(), vec![1.0], 8).unwrap();
        let v = phi.fourier_transform(0.0)[0];
        assert!((v - 1.0).norm() < 1e-13);
        // Orthonormal shifts: φ̂ vanishes at 2πk, k ≠ 0.
        assert!(phi.fourier_transform(2.0 * std::f64::consts::PI)[0].norm() < 1e-12);
    }
}

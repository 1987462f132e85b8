//! Finitely supported matrix sequences: convolution, Fourier-series
//! derivatives and the sign-tail convolution sums.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GibbsError, Result};
use crate::linalg::CMat;

/// Tolerance on `d̂(0) = 0` for [`tail_convolve_sums`].
pub const TAIL_ZERO_TOL: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Finitely supported sequence of `rows × cols` complex matrices.
///
/// Stored entries are contiguous from `offset`; leading and trailing zero
/// matrices are trimmed, so the zero sequence has no entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixSeqJson", into = "MatrixSeqJson")]
pub struct MatrixSeq {
    offset: i64,
    rows: usize,
    cols: usize,
    entries: Vec<CMat>,
}

impl MatrixSeq {
    pub fn new(offset: i64, entries: Vec<CMat>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(GibbsError::InvalidInput(
                "sequence needs at least one entry; use MatrixSeq::zero".into(),
            ));
        };
        let shape = first.shape();
        if let Some(bad) = entries.iter().find(|e| e.shape() != shape) {
            return Err(GibbsError::DimensionMismatch(format!(
                "entries of shape {:?} and {:?} in one sequence",
                shape,
                bad.shape()
            )));
        }
        let mut seq = MatrixSeq {
            offset,
            rows: shape.0,
            cols: shape.1,
            entries,
        };
        seq.trim();
        Ok(seq)
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        MatrixSeq {
            offset: 0,
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    /// `δ · I_n`.
    pub fn dirac(n: usize) -> Self {
        MatrixSeq {
            offset: 0,
            rows: n,
            cols: n,
            entries: vec![CMat::identity(n)],
        }
    }

    /// Scalar sequence with real coefficients starting at `offset`.
    pub fn scalar(offset: i64, coeffs: &[f64]) -> Self {
        let entries = coeffs.iter().map(|&c| CMat::real_scalar(c)).collect();
        Self::from_entries_unchecked(offset, 1, 1, entries)
    }

    pub fn scalar_complex(offset: i64, coeffs: &[Complex64]) -> Self {
        let entries = coeffs.iter().map(|&c| CMat::scalar(c)).collect();
        Self::from_entries_unchecked(offset, 1, 1, entries)
    }

    /// Sequence of real `rows × cols` matrices given row-major.
    pub fn real(offset: i64, rows: usize, cols: usize, entries: &[Vec<f64>]) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| e.len() != rows * cols) {
            return Err(GibbsError::DimensionMismatch(format!(
                "entry of length {} for shape {rows}x{cols}",
                e.len()
            )));
        }
        let entries = entries
            .iter()
            .map(|e| CMat::from_real(rows, cols, e))
            .collect();
        Ok(Self::from_entries_unchecked(offset, rows, cols, entries))
    }

    fn from_entries_unchecked(offset: i64, rows: usize, cols: usize, entries: Vec<CMat>) -> Self {
        let mut seq = MatrixSeq {
            offset,
            rows,
            cols,
            entries,
        };
        seq.trim();
        seq
    }

    fn trim(&mut self) {
        while self.entries.last().is_some_and(|e| e.is_zero()) {
            self.entries.pop();
        }
        let lead = self.entries.iter().take_while(|e| e.is_zero()).count();
        if lead > 0 {
            self.entries.drain(..lead);
            self.offset += lead as i64;
        }
        if self.entries.is_empty() {
            self.offset = 0;
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index of the first stored entry.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Index of the last stored entry (`offset − 1` for the zero sequence).
    pub fn last_index(&self) -> i64 {
        self.offset + self.entries.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CMat] {
        &self.entries
    }

    /// Entry at index `k`, zero outside the stored range.
    pub fn get(&self, k: i64) -> CMat {
        let i = k - self.offset;
        if i >= 0 && (i as usize) < self.entries.len() {
            self.entries[i as usize].clone()
        } else {
            CMat::zeros(self.rows, self.cols)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &CMat)> {
        self.entries
            .iter()
            .enumerate()
            .map(move |(i, e)| (self.offset + i as i64, e))
    }

    fn map_entries(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        let entries: Vec<CMat> = self.entries.iter().map(f).collect();
        let (rows, cols) = entries
            .first()
            .map(|e| e.shape())
            .unwrap_or((self.rows, self.cols));
        Self::from_entries_unchecked(self.offset, rows, cols, entries)
    }

    pub fn scale(&self, z: Complex64) -> Self {
        self.map_entries(|e| e.scale(z))
    }

    /// Entrywise transpose; its symbol is `û(ξ)ᵀ`.
    pub fn transpose(&self) -> Self {
        let mut out = self.map_entries(|e| e.transpose());
        out.rows = self.cols;
        out.cols = self.rows;
        out
    }

    /// `k ↦ conj(u(−k))`; its symbol is `conj(û(ξ))`.
    pub fn conj_reverse(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let entries: Vec<CMat> = self.entries.iter().rev().map(|e| e.conj()).collect();
        Self::from_entries_unchecked(-self.last_index(), self.rows, self.cols, entries)
    }

    /// `(−1)^k u(k)`; its symbol is `û(ξ + π)`.
    pub fn modulate(&self) -> Self {
        let entries = self
            .iter()
            .map(|(k, e)| {
                if k.rem_euclid(2) == 1 {
                    e.scale(Complex64::new(-1.0, 0.0))
                } else {
                    e.clone()
                }
            })
            .collect();
        Self::from_entries_unchecked(self.offset, self.rows, self.cols, entries)
    }

    /// `u↑(2k) = u(k)`, zero at odd indices; its symbol is `û(2ξ)`.
    pub fn upsample(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut entries = Vec::with_capacity(2 * self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                entries.push(CMat::zeros(self.rows, self.cols));
            }
            entries.push(e.clone());
        }
        Self::from_entries_unchecked(2 * self.offset, self.rows, self.cols, entries)
    }

    pub fn add(&self, other: &MatrixSeq) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &MatrixSeq) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &MatrixSeq, sign: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(GibbsError::DimensionMismatch(format!(
                "cannot add sequences of shapes {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        if self.is_zero() {
            return Ok(other.scale(Complex64::new(sign, 0.0)));
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let lo = self.offset.min(other.offset);
        let hi = self.last_index().max(other.last_index());
        let s = Complex64::new(sign, 0.0);
        let entries = (lo..=hi)
            .map(|k| self.get(k).add(&other.get(k).scale(s)))
            .collect();
        Ok(Self::from_entries_unchecked(lo, self.rows, self.cols, entries))
    }

    /// `Σ_k u(k)`, i.e. `û(0)`.
    pub fn sum(&self) -> CMat {
        self.entries
            .iter()
            .fold(CMat::zeros(self.rows, self.cols), |acc, e| acc.add(e))
    }

    /// `û(ξ) = Σ_k u(k) e^{−ikξ}`.
    pub fn fourier(&self, xi: f64) -> CMat {
        self.fourier_deriv_unchecked(0, xi)
    }

    /// `û^{(j)}(ξ₀) = Σ_k u(k) (−ik)^j e^{−ikξ₀}` for `j ≤ 8`.
    pub fn fourier_deriv(&self, j: u32, xi: f64) -> Result<CMat> {
        if j > 8 {
            return Err(GibbsError::InvalidInput(format!(
                "Fourier derivative order {j} exceeds 8"
            )));
        }
        Ok(self.fourier_deriv_unchecked(j, xi))
    }

    fn fourier_deriv_unchecked(&self, j: u32, xi: f64) -> CMat {
        let mut acc = CMat::zeros(self.rows, self.cols);
        for (k, e) in self.iter() {
            let kf = k as f64;
            let w = (Complex64::new(0.0, -kf)).powu(j) * Complex64::from_polar(1.0, -kf * xi);
            acc = acc.add(&e.scale(w));
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    /// Largest imaginary part over all entries.
    pub fn max_imag(&self) -> f64 {
        self.entries.iter().map(|e| e.max_imag()).fold(0.0, f64::max)
    }

    /// Real parts of the entries as `(index, rows)` pairs.
    pub fn real_entries(&self) -> Vec<(i64, Vec<Vec<f64>>)> {
        self.iter().map(|(k, e)| (k, e.real_rows())).collect()
    }
}

/// `[u*d](n) = Σ_k u(n−k) d(k)`.
pub fn convolve(u: &MatrixSeq, d: &MatrixSeq) -> Result<MatrixSeq> {
    if u.cols != d.rows {
        return Err(GibbsError::DimensionMismatch(format!(
            "cannot convolve {}x{} with {}x{}",
            u.rows, u.cols, d.rows, d.cols
        )));
    }
    if u.is_zero() || d.is_zero() {
        return Ok(MatrixSeq::zero(u.rows, d.cols));
    }
    let len = u.len() + d.len() - 1;
    let mut entries = vec![CMat::zeros(u.rows, d.cols); len];
    for (i, ue) in u.entries.iter().enumerate() {
        for (j, de) in d.entries.iter().enumerate() {
            entries[i + j] = entries[i + j].add(&ue.matmul(de));
        }
    }
    Ok(MatrixSeq::from_entries_unchecked(
        u.offset + d.offset,
        u.rows,
        d.cols,
        entries,
    ))
}

/// Sequence `c = c∞·v + f` where `v(k) = 1` for `k ≥ 0`, `−1` for `k < 0`
/// and `f` is finitely supported.
#[derive(Clone, Debug, PartialEq)]
pub struct SignLikeSeq {
    tail: CMat,
    finite: MatrixSeq,
}

impl SignLikeSeq {
    pub fn new(tail: CMat, finite: MatrixSeq) -> Result<Self> {
        if tail.shape() != finite.shape() {
            return Err(GibbsError::DimensionMismatch(format!(
                "tail coefficient {:?} and finite part {:?}",
                tail.shape(),
                finite.shape()
            )));
        }
        Ok(SignLikeSeq { tail, finite })
    }

    pub fn tail(&self) -> &CMat {
        &self.tail
    }

    pub fn finite_part(&self) -> &MatrixSeq {
        &self.finite
    }

    pub fn get(&self, k: i64) -> CMat {
        let v = if k >= 0 { 1.0 } else { -1.0 };
        self.tail.scale(Complex64::new(v, 0.0)).add(&self.finite.get(k))
    }
}

/// `Σ_k [c*d](k)` and `Σ_k k·[c*d](k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailSums {
    pub sum0: CMat,
    pub sum1: CMat,
}

fn check_tail_pair(c: &SignLikeSeq, d: &MatrixSeq) -> Result<()> {
    if c.tail.cols() != d.shape().0 {
        return Err(GibbsError::DimensionMismatch(format!(
            "cannot convolve {:?} with {:?}",
            c.tail.shape(),
            d.shape()
        )));
    }
    let dc = d.sum().max_abs();
    if dc > TAIL_ZERO_TOL {
        return Err(GibbsError::Precondition(format!(
            "d̂(0) must vanish, found |d̂(0)| = {dc:e}"
        )));
    }
    Ok(())
}

/// Explicit `c*d` by the defining sum; finitely supported when `d̂(0) = 0`.
pub fn tail_convolve(c: &SignLikeSeq, d: &MatrixSeq) -> Result<MatrixSeq> {
    check_tail_pair(c, d)?;
    let (rows, cols) = (c.tail.rows(), d.shape().1);
    if d.is_zero() {
        return Ok(MatrixSeq::zero(rows, cols));
    }
    let (dlo, dhi) = (d.offset(), d.last_index());
    let (mut lo, mut hi) = (dlo, dhi - 1);
    if !c.finite.is_zero() {
        lo = lo.min(c.finite.offset() + dlo);
        hi = hi.max(c.finite.last_index() + dhi);
    }
    if hi < lo {
        return Ok(MatrixSeq::zero(rows, cols));
    }
    let entries = (lo..=hi)
        .map(|n| {
            d.iter().fold(CMat::zeros(rows, cols), |acc, (k, dk)| {
                acc.add(&c.get(n - k).matmul(dk))
            })
        })
        .collect();
    Ok(MatrixSeq::from_entries_unchecked(lo, rows, cols, entries))
}

/// Direct sums of the explicit convolution.
pub fn tail_convolve_sums(c: &SignLikeSeq, d: &MatrixSeq) -> Result<TailSums> {
    let cd = tail_convolve(c, d)?;
    let (rows, cols) = cd.shape();
    let mut sum0 = CMat::zeros(rows, cols);
    let mut sum1 = CMat::zeros(rows, cols);
    for (k, e) in cd.iter() {
        sum0 = sum0.add(e);
        sum1 = sum1.add(&e.scale(Complex64::new(k as f64, 0.0)));
    }
    Ok(TailSums { sum0, sum1 })
}

/// Closed forms of the two sums in terms of `c∞`, `(c − c∞v)^(0)` and
/// the first two derivatives of `d̂` at the origin.
pub fn tail_sums_closed_form(c: &SignLikeSeq, d: &MatrixSeq) -> Result<TailSums> {
    check_tail_pair(c, d)?;
    let d1 = d.fourier_deriv_unchecked(1, 0.0);
    let d2 = d.fourier_deriv_unchecked(2, 0.0);
    let t_d1 = c.tail.matmul(&d1);
    let sum0 = t_d1.scale(-2.0 * I);
    let sum1 = t_d1
        .scale(I)
        .add(&c.tail.matmul(&d2))
        .add(&c.finite.sum().matmul(&d1).scale(I));
    Ok(TailSums { sum0, sum1 })
}

#[derive(Serialize, Deserialize)]
struct MatrixSeqJson {
    offset: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    entries: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<MatrixSeqJson> for MatrixSeq {
    type Error = GibbsError;

    fn try_from(j: MatrixSeqJson) -> Result<Self> {
        let len = j.entries.first().map(|e| e.len()).unwrap_or(1);
        let (rows, cols) = match (j.rows, j.cols) {
            (Some(r), Some(c)) => (r, c),
            (Some(r), None) if r > 0 => (r, len / r),
            (None, Some(c)) if c > 0 => (len / c, c),
            _ => (len, 1),
        };
        if rows == 0 || cols == 0 {
            return Err(GibbsError::InvalidInput("empty matrix shape".into()));
        }
        let mut entries = Vec::with_capacity(j.entries.len());
        for e in &j.entries {
            if e.len() != rows * cols {
                return Err(GibbsError::DimensionMismatch(format!(
                    "entry with {} values for shape {rows}x{cols}",
                    e.len()
                )));
            }
            entries.push(CMat::from_vec(
                rows,
                cols,
                e.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
            ));
        }
        Ok(MatrixSeq::from_entries_unchecked(j.offset, rows, cols, entries))
    }
}

impl From<MatrixSeq> for MatrixSeqJson {
    fn from(s: MatrixSeq) -> Self {
        let column = s.cols == 1;
        MatrixSeqJson {
            offset: s.offset,
            rows: (!column).then_some(s.rows),
            cols: (!column).then_some(s.cols),
            entries: s
                .entries
                .iter()
                .map(|e| e.data().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dirac_is_convolution_identity() {
        let u = MatrixSeq::scalar(-2, &[1.0, -3.0, 0.5]);
        assert_eq!(convolve(&MatrixSeq::dirac(1), &u).unwrap(), u);
    }

    #[test]
    fn binomial_product() {
        let u = MatrixSeq::scalar(0, &[1.0, 1.0]);
        let d = MatrixSeq::scalar(0, &[1.0, -1.0]);
        let p = convolve(&u, &d).unwrap();
        assert_eq!(p, MatrixSeq::scalar(0, &[1.0, 0.0, -1.0]));
        assert_eq!(p.offset(), 0);
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn trimming_drops_boundary_zeros() {
        let u = MatrixSeq::scalar(-1, &[0.0, 2.0, 0.0, 0.0]);
        assert_eq!(u.offset(), 0);
        assert_eq!(u.len(), 1);
        assert!(MatrixSeq::scalar(3, &[0.0, 0.0]).is_zero());
    }

    #[test]
    fn fourier_examples() {
        let one = MatrixSeq::dirac(1).fourier_deriv(0, 0.0).unwrap();
        assert_abs_diff_eq!(one.get(0, 0).re, 1.0);
        let haar = MatrixSeq::scalar(0, &[0.5, 0.5]);
        assert!(haar.fourier(std::f64::consts::PI).max_abs() < 1e-16);
        let b2 = MatrixSeq::scalar(0, &[0.25, 0.5, 0.25]);
        let d = b2.fourier_deriv(1, 0.0).unwrap().get(0, 0);
        assert_abs_diff_eq!(d.re, 0.0);
        assert_abs_diff_eq!(d.im, -1.0);
        assert!(b2.fourier_deriv(9, 0.0).is_err());
    }

    #[test]
    fn symbol_transforms() {
        let a = MatrixSeq::scalar_complex(
            -1,
            &[Complex64::new(1.0, 2.0), Complex64::new(0.5, 0.0), Complex64::new(-1.0, 0.3)],
        );
        let xi = 0.7;
        let ahat = a.fourier(xi).get(0, 0);
        assert!((a.conj_reverse().fourier(xi).get(0, 0) - ahat.conj()).norm() < 1e-14);
        let shifted = a.fourier(xi + std::f64::consts::PI).get(0, 0);
        assert!((a.modulate().fourier(xi).get(0, 0) - shifted).norm() < 1e-14);
        let doubled = a.fourier(2.0 * xi).get(0, 0);
        assert!((a.upsample().fourier(xi).get(0, 0) - doubled).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_reported() {
        let u = MatrixSeq::real(0, 2, 2, &[vec![1.0, 0.0, 0.0, 1.0]]).unwrap();
        let d = MatrixSeq::real(0, 3, 1, &[vec![1.0, 1.0, 1.0]]).unwrap();
        let err = convolve(&u, &d).unwrap_err();
        assert!(err.to_string().contains("2x2"));
    }

    #[test]
    fn sign_tail_example() {
        let c = SignLikeSeq::new(CMat::real_scalar(1.0), MatrixSeq::zero(1, 1)).unwrap();
        let d = MatrixSeq::scalar(0, &[1.0, -1.0]);
        let cd = tail_convolve(&c, &d).unwrap();
        assert_eq!(cd, MatrixSeq::scalar(0, &[2.0]));
        let s = tail_convolve_sums(&c, &d).unwrap();
        assert_abs_diff_eq!(s.sum0.get(0, 0).re, 2.0);
        let cf = tail_sums_closed_form(&c, &d).unwrap();
        assert!(cf.sum0.sub(&s.sum0).max_abs() < 1e-14);
        assert!(cf.sum1.sub(&s.sum1).max_abs() < 1e-14);
    }

    #[test]
    fn zero_tail_gives_zero_sum() {
        let c = SignLikeSeq::new(CMat::real_scalar(0.0), MatrixSeq::scalar(-1, &[2.0, 1.0, -4.0]))
            .unwrap();
        let d = MatrixSeq::scalar(0, &[1.0, -3.0, 2.0]);
        let s = tail_convolve_sums(&c, &d).unwrap();
        assert!(s.sum0.max_abs() < 1e-14);
    }

    #[test]
    fn nonzero_mean_rejected() {
        let c = SignLikeSeq::new(CMat::real_scalar(1.0), MatrixSeq::zero(1, 1)).unwrap();
        let d = MatrixSeq::scalar(0, &[1.0, -0.5]);
        assert!(matches!(
            tail_convolve_sums(&c, &d),
            Err(GibbsError::Precondition(_))
        ));
    }

    #[test]
    fn json_roundtrip() {
        let m = MatrixSeq::real(1, 2, 1, &[vec![0.5, 1.0], vec![-0.5, 2.0]]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: MatrixSeq = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let s: MatrixSeq = serde_json::from_str(r#"{"offset":0,"entries":[[[0.5,0]],[[0.5,0]]]}"#)
            .unwrap();
        assert_eq!(s, MatrixSeq::scalar(0, &[0.5, 0.5]));
    }
}

//! Dense real polynomials in a local variable.

/// Coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// `t^j`.
    pub fn monomial(j: usize) -> Self {
        let mut c = vec![0.0; j + 1];
        c[j] = 1.0;
        Poly(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    /// Degree of the stored coefficient vector (trailing zeros included).
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&0.0) + other.0.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// `q(t) = p(t + d)`.
    pub fn shift(&self, d: f64) -> Poly {
        if d == 0.0 {
            return self.clone();
        }
        let n = self.0.len();
        let mut out = self.0.clone();
        // Repeated synthetic division (Taylor shift).
        for i in 0..n {
            for k in (i..n.saturating_sub(1)).rev() {
                out[k] += d * out[k + 1];
            }
        }
        Poly(out)
    }

    /// `q(t) = p(s·t)`.
    pub fn dilate(&self, s: f64) -> Poly {
        let mut f = 1.0;
        Poly(
            self.0
                .iter()
                .map(|c| {
                    let v = c * f;
                    f *= s;
                    v
                })
                .collect(),
        )
    }

    pub fn derivative(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.push(0.0);
        out.extend(self.0.iter().enumerate().map(|(i, c)| c / (i + 1) as f64));
        Poly(out)
    }

    /// `∫_a^b p(t) dt`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let q = self.antiderivative();
        q.eval(b) - q.eval(a)
    }

    /// Coefficient vector with trailing zeros removed.
    pub fn trimmed(&self) -> Poly {
        let mut c = self.0.clone();
        while c.last() == Some(&0.0) {
            c.pop();
        }
        Poly(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_matches_direct_evaluation() {
        let p = Poly(vec![1.0, -2.0, 0.5, 3.0]);
        let q = p.shift(0.75);
        for &t in &[-1.0, 0.0, 0.3, 2.0] {
            assert!((q.eval(t) - p.eval(t + 0.75)).abs() < 1e-12);
        }
    }

    #[test]
    fn dilate_and_integrate() {
        let p = Poly(vec![0.0, 0.0, 3.0]);
        assert!((p.integral(0.0, 2.0) - 8.0).abs() < 1e-14);
        let q = p.dilate(2.0);
        assert!((q.eval(1.5) - p.eval(3.0)).abs() < 1e-14);
    }

    #[test]
    fn product_degree() {
        let p = Poly(vec![1.0, 1.0]).mul(&Poly(vec![-1.0, 1.0]));
        assert_eq!(p, Poly(vec![-1.0, 0.0, 1.0]));
        assert_eq!(p.derivative(), Poly(vec![0.0, 2.0]));
    }
}

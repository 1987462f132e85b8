//! Gauss–Legendre rules.

use std::sync::OnceLock;

/// Number of nodes of the fixed rule used for non-polynomial integrands.
pub const GL_NODES: usize = 16;

/// Nodes and weights of the `n`-point rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 0.5 * w;
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// The cached [`GL_NODES`]-point rule on `[0, 1]`.
pub fn standard_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_NODES))
}

/// `∫_a^b f` with the standard rule on `panels` equal panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = standard_rule();
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(lo + xi * h);
        }
    }
    s * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_high_degree() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(31)).sum();
        assert!((s - 1.0 / 32.0).abs() < 1e-15);
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_integrand() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 2);
        assert!((v - 2.0).abs() < 1e-14);
    }
}

//! Piecewise-constant duals of a nonnegative scaling function that give
//! accuracy order `m` without overshoot at the origin.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{GibbsError, Result};
use crate::funcmodel::{FunctionHandle, PiecewisePoly};
use crate::gibbs::{nonneg_sufficient, overshoot, NonnegReport, Overshoot, NONNEG_TOL};
use crate::linalg::solve_real;
use crate::quasiproj::{poly_reproduction, Grid, QuasiProjectionPair, REPRODUCTION_TOL};

/// Largest supported order.
pub const MAX_ORDER: usize = 9;

/// Tolerance on imaginary parts of `d_j` and on `φ̂(0) = 1`.
pub const REALITY_TOL: f64 = 1e-10;

/// Tolerance on the moment-matching residuals.
pub const MOMENT_TOL: f64 = 1e-10;

/// Grid level of the nonnegativity check.
const NONNEG_LEVEL: u32 = 10;

/// `d_j = i^j [1/conj(φ̂)]^{(j)}(0)` for `j < m`.
pub fn reciprocal_moments(phi: &FunctionHandle, m: usize) -> Result<Vec<f64>> {
    if phi.components() != 1 {
        return Err(GibbsError::Precondition("φ must be scalar".into()));
    }
    // conj(φ̂)(ξ) = Σ_j s_j ξ^j with s_j = conj(φ̂^{(j)}(0))/j!.
    let mut fact = 1.0;
    let s: Vec<Complex64> = (0..m)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            phi.fhat_deriv0(j)[0].conj() / fact
        })
        .collect();
    if (s[0] - 1.0).norm() > REALITY_TOL {
        return Err(GibbsError::Precondition(format!(
            "φ̂(0) = {} differs from 1",
            s[0].re
        )));
    }
    let mut r = vec![Complex64::new(0.0, 0.0); m];
    r[0] = 1.0 / s[0];
    for n in 1..m {
        let acc: Complex64 = (1..=n).map(|k| s[k] * r[n - k]).sum();
        r[n] = -acc / s[0];
    }
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(m);
    for (j, rj) in r.iter().enumerate() {
        if j > 0 {
            fact *= j as f64;
        }
        let d = Complex64::i().powu(j as u32) * rj * fact;
        if d.im.abs() > REALITY_TOL * d.re.abs().max(1.0) {
            return Err(GibbsError::Numerical(format!(
                "d_{j} = {d} is not real"
            )));
        }
        out.push(d.re);
    }
    Ok(out)
}

/// Placement of `N = x₀ < … < x_{m−1} = N + 1`.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum KnotRule {
    #[default]
    Uniform,
    /// Offsets from `N`: strictly increasing, starting at 0, ending at 1.
    Relative(Vec<f64>),
}

impl KnotRule {
    fn knots(&self, n: i64, m: usize) -> Result<Vec<f64>> {
        let offsets: Vec<f64> = match self {
            KnotRule::Uniform => (0..m).map(|k| k as f64 / (m - 1) as f64).collect(),
            KnotRule::Relative(v) => {
                if v.len() != m {
                    return Err(GibbsError::InvalidInput(format!(
                        "{} knots given, order {m} needs {m}",
                        v.len()
                    )));
                }
                if v[0] != 0.0 || v[m - 1] != 1.0 || v.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(GibbsError::InvalidInput(
                        "knot offsets must increase strictly from 0 to 1".into(),
                    ));
                }
                v.clone()
            }
        };
        Ok(offsets.into_iter().map(|o| n as f64 + o).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstructionDiagnostics {
    /// `|∫ x^j φ̃ − d_j|`, `j < m`.
    pub moment_residuals: Vec<f64>,
    /// `sup |Σ_k φ̃(x − k) − 1|` on a grid of one period.
    pub partition_residual: f64,
    /// Polynomial reproduction residuals of the pair `(φ, φ̃)`.
    pub reproduction_residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualConstruction {
    pub m: usize,
    pub d: Vec<f64>,
    #[serde(rename = "N")]
    pub n: i64,
    pub knots: Vec<f64>,
    /// `c₁ … c_{m−1}`.
    pub c: Vec<f64>,
    pub phi_tilde: PiecewisePoly,
    pub diagnostics: ConstructionDiagnostics,
}

/// `∫_a^b (x^j − (x − 1)^j) dx`.
fn difference_integral(j: usize, a: f64, b: f64) -> f64 {
    let p = (j + 1) as i32;
    ((b.powi(p) - (b - 1.0).powi(p)) - (a.powi(p) - (a - 1.0).powi(p))) / (j + 1) as f64
}

/// Relative rounding allowance of the reproduction gate.
const ROUNDING_ALLOWANCE: f64 = 1e-11;

/// Accepted reproduction residual for order `m`: rounding in the moments
/// and in `⟨x^j, φ̃(· − k)⟩` grows like `scale^{m−1}`.
fn reproduction_gate(scale: f64, m: usize) -> f64 {
    REPRODUCTION_TOL.max(ROUNDING_ALLOWANCE * scale.powi(m as i32 - 1))
}

/// Builds `φ̃ = η − η(· + 1) + χ_{(N−1, N]}` with
/// `η = Σ_k c_k χ_{[x_{k−1}, x_k]}` and moments `d_0 … d_{m−1}`.
pub fn build_dual(phi: &FunctionHandle, m: usize, knots: &KnotRule) -> Result<DualConstruction> {
    if !(1..=MAX_ORDER).contains(&m) {
        return Err(GibbsError::InvalidInput(format!(
            "order {m} outside 1..={MAX_ORDER}"
        )));
    }
    let d = reciprocal_moments(phi, m.max(2))?;
    let min = phi.min_value(NONNEG_LEVEL);
    if min < -NONNEG_TOL {
        return Err(GibbsError::Precondition(format!(
            "φ must be nonnegative (minimum {min:.3e})"
        )));
    }
    let n = (d[1] + 0.5).floor() as i64;
    let nf = n as f64;
    let (xs, c, phi_tilde) = if m == 1 {
        (vec![nf], vec![], PiecewisePoly::indicator(nf - 1.0, nf)?)
    } else {
        let xs = knots.knots(n, m)?;
        let a: Vec<Vec<f64>> = (1..m)
            .map(|j| (1..m).map(|k| difference_integral(j, xs[k - 1], xs[k])).collect())
            .collect();
        let rhs: Vec<f64> = (1..m)
            .map(|j| {
                let p = (j + 1) as i32;
                d[j] - (nf.powi(p) - (nf - 1.0).powi(p)) / (j + 1) as f64
            })
            .collect();
        let c = solve_real(a, rhs).ok_or(GibbsError::Singular)?;
        let mut breaks: Vec<f64> = xs.iter().map(|x| x - 1.0).collect();
        breaks.extend_from_slice(&xs[1..]);
        let mut values: Vec<f64> = c.iter().map(|ck| 1.0 - ck).collect();
        values.extend_from_slice(&c);
        (xs, c, PiecewisePoly::piecewise_constant(breaks, &values)?)
    };
    let d = d[..m].to_vec();
    let moment_residuals = (0..m)
        .map(|j| (phi_tilde.moment(j)[0] - d[j]).abs())
        .collect();
    let partition_residual = (0..1024)
        .map(|i| {
            let x = (i as f64 + 0.5) / 1024.0;
            let s: f64 = (-2..=2).map(|k| phi_tilde.eval_component(x + (n + k) as f64, 0)).sum();
            (s - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let pair = QuasiProjectionPair::new(phi.clone(), phi_tilde.clone().into())?;
    let reproduction_residuals = poly_reproduction(&pair, m, &Grid::new(8))?;
    let gate = reproduction_gate(pair.support_bound() as f64, m);
    if let Some((j, r)) = reproduction_residuals
        .iter()
        .enumerate()
        .find(|(_, r)| **r >= gate)
    {
        return Err(GibbsError::Precondition(format!(
            "pair fails to reproduce degree {j} (residual {r:.3e}); φ̂ lacks order-{m} zeros at 2πk"
        )));
    }
    Ok(DualConstruction {
        m,
        d,
        n,
        knots: xs,
        c,
        phi_tilde,
        diagnostics: ConstructionDiagnostics {
            moment_residuals,
            partition_residual,
            reproduction_residuals,
        },
    })
}

impl DualConstruction {
    pub fn pair(&self, phi: &FunctionHandle) -> Result<QuasiProjectionPair> {
        QuasiProjectionPair::new(phi.clone(), self.phi_tilde.clone().into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GibbsFreeReport {
    /// `∫_N^{N+1} φ̃`.
    pub right_integral: f64,
    /// `∫_{N−1}^N φ̃`.
    pub left_integral: f64,
    pub integrals_in_range: bool,
    pub nonneg: NonnegReport,
    pub origin: Overshoot,
    /// Largest `R(t)` and smallest `L(t)` over a uniform `t`-sweep; not
    /// covered by any guarantee.
    pub sweep: Option<(f64, f64)>,
    pub clean: bool,
}

/// Tolerance on the overshoot at the origin.
pub const OVERSHOOT_TOL: f64 = 1e-9;

pub fn verify_gibbs_free(
    construction: &DualConstruction,
    phi: &FunctionHandle,
    level: u32,
    sweep: Option<usize>,
) -> Result<GibbsFreeReport> {
    let n = construction.n as f64;
    let pt = &construction.phi_tilde;
    let right = pt.integral(n, n + 1.0)[0];
    let left = pt.integral(n - 1.0, n)[0];
    let in_unit = |v: f64| (-1e-12..=1.0 + 1e-12).contains(&v);
    let pair = construction.pair(phi)?;
    let nonneg = nonneg_sufficient(&pair, NONNEG_LEVEL);
    let origin = overshoot(&pair, 0.0, level)?;
    let sweep = match sweep {
        Some(s) if s > 0 => {
            let curve = crate::gibbs::overshoot_curve(&pair, s, level)?;
            Some((
                curve.iter().map(|o| o.r).fold(f64::NEG_INFINITY, f64::max),
                curve.iter().map(|o| o.l).fold(f64::INFINITY, f64::min),
            ))
        }
        _ => None,
    };
    let integrals_in_range = in_unit(right) && in_unit(left);
    let clean = integrals_in_range
        && nonneg.item_i
        && origin.r <= 1.0 + OVERSHOOT_TOL
        && origin.l >= -1.0 - OVERSHOOT_TOL;
    Ok(GibbsFreeReport {
        right_integral: right,
        left_integral: left,
        integrals_in_range,
        nonneg,
        origin,
        sweep,
        clean,
    })
}

/// Outcome of [`optimality_witness`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Witness {
    NotApplicable,
    Checked {
        violated: bool,
        worst_k: i64,
        /// `|[φ̃̂]′(2π·worst_k)|`.
        worst_value: f64,
    },
}

/// Range of `|k|` scanned by [`optimality_witness`].
pub const WITNESS_RANGE: i64 = 4;

/// Scans `[φ̃̂]′(2πk)`, `0 < |k| ≤ 4`, for a nonzero value.
pub fn optimality_witness(construction: &DualConstruction) -> Witness {
    optimality_witness_for(&construction.phi_tilde, construction.m)
}

pub fn optimality_witness_for(phi_tilde: &PiecewisePoly, m: usize) -> Witness {
    if m < 3 {
        return Witness::NotApplicable;
    }
    let (worst_k, worst_value) = (-WITNESS_RANGE..=WITNESS_RANGE)
        .filter(|k| *k != 0)
        .map(|k| {
            let xi = 2.0 * std::f64::consts::PI * k as f64;
            (k, phi_tilde.fourier_deriv(1, xi)[0].norm())
        })
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Witness::Checked {
        violated: worst_value > 1e-8,
        worst_k,
        worst_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::bspline;
    use approx::assert_abs_diff_eq;

    fn spline(m: usize) -> FunctionHandle {
        bspline(m).unwrap().into()
    }

    #[test]
    fn reciprocal_examples() {
        let d = reciprocal_moments(&spline(1), 2).unwrap();
        assert_abs_diff_eq!(d[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(reciprocal_moments(&spline(2), 2).unwrap()[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(reciprocal_moments(&spline(3), 2).unwrap()[1], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn linear_dual() {
        let c = build_dual(&spline(2), 2, &KnotRule::Uniform).unwrap();
        assert_eq!(c.n, 1);
        assert_abs_diff_eq!(c.c[0], 0.5, epsilon = 1e-15);
        let expect = PiecewisePoly::piecewise_constant(vec![0.0, 1.0, 2.0], &[0.5, 0.5]).unwrap();
        assert_eq!(c.phi_tilde, expect);
    }

    #[test]
    fn quadratic_dual() {
        let c = build_dual(&spline(3), 3, &KnotRule::Uniform).unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.knots, vec![2.0, 2.5, 3.0]);
        assert!(c.diagnostics.moment_residuals.iter().all(|r| *r < MOMENT_TOL));
        let rep = verify_gibbs_free(&c, &spline(3), 10, None).unwrap();
        assert_abs_diff_eq!(rep.right_integral, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.left_integral, 1.0, epsilon = 1e-14);
        assert!(rep.clean);
    }

    #[test]
    fn haar_degenerate() {
        let c = build_dual(&spline(1), 1, &KnotRule::Uniform).unwrap();
        assert_eq!(c.n, 1);
        assert!(c.c.is_empty());
        assert_eq!(c.phi_tilde, PiecewisePoly::indicator(0.0, 1.0).unwrap());
    }

    #[test]
    fn custom_knots() {
        let rule = KnotRule::Relative(vec![0.0, 0.3, 1.0]);
        let c = build_dual(&spline(3), 3, &rule).unwrap();
        assert_eq!(c.knots, vec![2.0, 2.3, 3.0]);
        assert!(c.diagnostics.moment_residuals.iter().all(|r| *r < MOMENT_TOL));
        for bad in [vec![0.0, 1.0], vec![0.0, 0.0, 1.0], vec![0.1, 0.5, 1.0]] {
            assert!(build_dual(&spline(3), 3, &KnotRule::Relative(bad)).is_err());
        }
    }

    #[test]
    fn witness_examples() {
        let c2 = build_dual(&spline(2), 2, &KnotRule::Uniform).unwrap();
        assert_eq!(optimality_witness(&c2), Witness::NotApplicable);
        let c3 = build_dual(&spline(3), 3, &KnotRule::Uniform).unwrap();
        assert!(matches!(optimality_witness(&c3), Witness::Checked { violated: true, .. }));
        let b3 = bspline(3).unwrap();
        assert!(matches!(
            optimality_witness_for(&b3, 3),
            Witness::Checked { violated: false, .. }
        ));
    }

    #[test]
    fn rejects_signed_phi() {
        let f = PiecewisePoly::piecewise_constant(vec![0.0, 1.0, 2.0], &[1.5, -0.5]).unwrap();
        assert!(matches!(
            build_dual(&f.into(), 2, &KnotRule::Uniform),
            Err(GibbsError::Precondition(_))
        ));
    }
}

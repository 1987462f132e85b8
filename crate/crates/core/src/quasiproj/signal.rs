use crate::funcmodel::FunctionHandle;

/// Test functions fed to quasi-projection operators and framelet
/// expansions.
#[derive(Clone, Debug)]
pub enum Signal {
    /// `sgn(x − at)` with value 0 at the jump.
    Sign { at: f64 },
    /// `sgn(x)` on `[−radius, radius]`, zero outside.
    ClippedSign { radius: f64 },
    /// `x^degree`.
    Monomial { degree: u32 },
    /// `x^degree` on `[−radius, radius]`, zero outside.
    WindowedMonomial { degree: u32, radius: f64 },
    /// `sin(frequency·x)`.
    Sine { frequency: f64 },
    /// `exp(−((x − center)/width)²)`.
    Gaussian { center: f64, width: f64 },
    /// One component of a compactly supported function.
    Component { f: FunctionHandle, component: usize },
}

/// Half-width, in units of `width`, beyond which the Gaussian is treated
/// as zero (`e^{−144}` is far below double precision).
const GAUSSIAN_RADIUS: f64 = 12.0;

impl Signal {
    pub fn sign() -> Self {
        Signal::Sign { at: 0.0 }
    }

    pub fn constant() -> Self {
        Signal::Monomial { degree: 0 }
    }

    /// Point value; at a jump the average of the one-sided limits.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Signal::Sign { at } => sgn(x - at),
            Signal::ClippedSign { radius } => {
                let a = x.abs();
                if a < *radius {
                    sgn(x)
                } else if a == *radius {
                    0.5 * sgn(x)
                } else {
                    0.0
                }
            }
            Signal::Monomial { degree } => x.powi(*degree as i32),
            Signal::WindowedMonomial { degree, radius } => {
                let a = x.abs();
                let v = x.powi(*degree as i32);
                if a < *radius {
                    v
                } else if a == *radius {
                    0.5 * v
                } else {
                    0.0
                }
            }
            Signal::Sine { frequency } => (frequency * x).sin(),
            Signal::Gaussian { center, width } => {
                let u = (x - center) / width;
                if u.abs() > GAUSSIAN_RADIUS {
                    0.0
                } else {
                    (-u * u).exp()
                }
            }
            Signal::Component { f, component } => f.eval_component(x, *component),
        }
    }

    /// Points where the signal may jump.
    pub fn jumps(&self) -> Vec<f64> {
        match self {
            Signal::Sign { at } => vec![*at],
            Signal::ClippedSign { radius } => vec![-radius, 0.0, *radius],
            Signal::WindowedMonomial { radius, .. } => vec![-radius, *radius],
            Signal::Component { f, .. } => match f.as_poly() {
                Some(p) => p.breakpoints().to_vec(),
                None => vec![],
            },
            _ => vec![],
        }
    }

    /// Bounded support, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Signal::ClippedSign { radius } | Signal::WindowedMonomial { radius, .. } => {
                Some((-radius, *radius))
            }
            Signal::Gaussian { center, width } => Some((
                center - GAUSSIAN_RADIUS * width.abs(),
                center + GAUSSIAN_RADIUS * width.abs(),
            )),
            Signal::Component { f, .. } => Some(f.support()),
            _ => None,
        }
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_conventions() {
        assert_eq!(Signal::sign().eval(0.0), 0.0);
        assert_eq!(Signal::Sign { at: 1.0 }.eval(0.5), -1.0);
        let c = Signal::ClippedSign { radius: 2.0 };
        assert_eq!(c.eval(-1.0), -1.0);
        assert_eq!(c.eval(2.0), 0.5);
        assert_eq!(c.eval(3.0), 0.0);
        assert_eq!(c.support(), Some((-2.0, 2.0)));
    }

    #[test]
    fn gaussian_support_cut() {
        let g = Signal::Gaussian { center: 1.0, width: 0.5 };
        assert_eq!(g.eval(1.0), 1.0);
        assert_eq!(g.eval(8.0), 0.0);
        assert_eq!(g.support(), Some((-5.0, 7.0)));
    }
}

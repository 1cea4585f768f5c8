use std::fmt;
use std::sync::Arc;

use super::{poly_jet, InvariantPotential, SymplecticPotential};
use crate::numerics::logistic;

/// A function of the moment coordinate, pulled back to x through a toric chart.
#[derive(Debug, Clone, PartialEq)]
pub enum PFunction {
    /// Polynomial `w(p) = Σ a_m p^m`.
    Poly(Vec<f64>),
    /// `w'(p)² / u''(p)`, the squared gradient of the polynomial `w`.
    GradSquared(Vec<f64>),
}

impl PFunction {
    /// `h, dh/dp, d²h/dp²` at `p` for the chart `u`.
    fn jet(&self, u: &SymplecticPotential, p: f64, pc: f64) -> [f64; 3] {
        match self {
            PFunction::Poly(a) => {
                let w = poly_jet(a, p);
                [w[0], w[1], w[2]]
            }
            PFunction::GradSquared(a) => {
                let w = poly_jet(a, p);
                let [g, g1, g2] = u.inverse_hessian_split(p, pc);
                [
                    w[1] * w[1] * g,
                    2.0 * w[1] * w[2] * g + w[1] * w[1] * g1,
                    2.0 * w[2] * w[2] * g + 2.0 * w[1] * w[3] * g + 4.0 * w[1] * w[2] * g1 + w[1] * w[1] * g2,
                ]
            }
        }
    }
}

/// A real function of x with its first two x-derivatives.
#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    /// `b σ(x)`.
    Logistic(f64),
    /// The relative potential `φ(x)` of an invariant potential.
    Phi(InvariantPotential),
    /// `h(p(x))` where `p` is the moment map of `chart`.
    OnMoment { chart: Arc<SymplecticPotential>, h: PFunction },
    /// Closure returning value, first and second derivative.
    Custom(Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>),
    Sum(Vec<(f64, ScalarField)>),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => write!(f, "Constant({c})"),
            ScalarField::Logistic(b) => write!(f, "Logistic({b})"),
            ScalarField::Phi(p) => f.debug_tuple("Phi").field(p).finish(),
            ScalarField::OnMoment { chart, h } => f.debug_struct("OnMoment").field("chart", chart).field("h", h).finish(),
            ScalarField::Custom(_) => write!(f, "Custom(..)"),
            ScalarField::Sum(parts) => f.debug_tuple("Sum").field(parts).finish(),
        }
    }
}

impl ScalarField {
    pub fn custom(f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        ScalarField::Custom(Arc::new(f))
    }

    /// `a·self + b·other`.
    pub fn lin(a: f64, x: ScalarField, b: f64, y: ScalarField) -> Self {
        ScalarField::Sum(vec![(a, x), (b, y)])
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }

    /// Value, first and second x-derivative.
    pub fn jet(&self, x: f64) -> [f64; 3] {
        match self {
            ScalarField::Constant(c) => [*c, 0.0, 0.0],
            ScalarField::Logistic(b) => {
                let (s, sc) = (logistic(x), logistic(-x));
                [b * s, b * s * sc, b * s * sc * (sc - s)]
            }
            ScalarField::Phi(phi) => {
                let j = phi.jet(x);
                let (s, sc) = (logistic(x), logistic(-x));
                [j.psi - crate::numerics::softplus(x), j.d1 - s, j.d2 - s * sc]
            }
            ScalarField::OnMoment { chart, h } => {
                let y = chart.logit_moment(x);
                let (p, pc) = (logistic(y), logistic(-y));
                let [g, g1, _] = chart.inverse_hessian_split(p, pc);
                let [v, v1, v2] = h.jet(chart, p, pc);
                [v, g * v1, g * g * v2 + g * g1 * v1]
            }
            ScalarField::Custom(f) => f(x),
            ScalarField::Sum(parts) => {
                let mut out = [0.0; 3];
                for (w, part) in parts {
                    let j = part.jet(x);
                    for i in 0..3 {
                        out[i] += w * j[i];
                    }
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::legendre;

    fn fd_check(f: &ScalarField, x: f64) {
        let h = 1e-4;
        let j = f.jet(x);
        let d1 = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
        let d2 = (f.jet(x + h)[1] - f.jet(x - h)[1]) / (2.0 * h);
        assert!((d1 - j[1]).abs() < 1e-7 * j[1].abs().max(1.0), "{d1} vs {}", j[1]);
        assert!((d2 - j[2]).abs() < 1e-7 * j[2].abs().max(1.0), "{d2} vs {}", j[2]);
    }

    #[test]
    fn derivatives_are_consistent() {
        let u = Arc::new(SymplecticPotential::with_coeffs(&[0.2, 0.3, -0.4, 0.1]).unwrap());
        let fields = [
            ScalarField::Logistic(0.7),
            ScalarField::Phi(legendre(&u)),
            ScalarField::OnMoment { chart: u.clone(), h: PFunction::Poly(vec![0.1, -0.3, 0.5, 0.2]) },
            ScalarField::OnMoment { chart: u.clone(), h: PFunction::GradSquared(vec![0.1, -0.3, 0.5, 0.2]) },
            ScalarField::lin(2.0, ScalarField::Constant(1.0), -1.0, ScalarField::Logistic(0.5)),
        ];
        for f in &fields {
            for x in [-3.0, -0.2, 1.1, 4.0] {
                fd_check(f, x);
            }
        }
    }

    #[test]
    fn phi_of_fubini_study_vanishes() {
        let f = ScalarField::Phi(InvariantPotential::fubini_study());
        for x in [-20.0, 0.0, 20.0] {
            assert!(f.jet(x).iter().all(|v| v.abs() < 1e-12));
        }
    }
}

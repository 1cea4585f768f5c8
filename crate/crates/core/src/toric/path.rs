use std::sync::Arc;

use super::{legendre, InvariantPotential, PFunction, ScalarField, SymplecticPotential};
use crate::error::{Error, Result};
use crate::numerics::logit;

/// Shape of an additive perturbation `ε t(1-t) P(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `P ≡ 1`.
    Constant,
    /// `P = σ(x)`.
    Logistic,
}

impl Profile {
    fn field(self, scale: f64) -> ScalarField {
        match self {
            Profile::Constant => ScalarField::Constant(scale),
            Profile::Logistic => ScalarField::Logistic(scale),
        }
    }

    fn add(self, phi: &InvariantPotential, amount: f64) -> Result<InvariantPotential> {
        match self {
            Profile::Constant => Ok(phi.plus_constant(amount)),
            Profile::Logistic => phi.plus_logistic(amount),
        }
    }
}

/// A smooth path `t ↦ φ(t)`, `t ∈ [0, 1]`, with analytic `φ̇` and `φ̈`.
#[derive(Debug, Clone)]
pub enum PathInH {
    /// The geodesic obtained by interpolating symplectic potentials.
    Geodesic { u0: SymplecticPotential, u1: SymplecticPotential },
    /// `(1 - t) φ0 + t φ1`.
    Linear { phi0: InvariantPotential, phi1: InvariantPotential },
    /// `base(t) + ε t(1 - t) P`.
    Perturbed { base: Box<PathInH>, eps: f64, profile: Profile },
    Constant(InvariantPotential),
}

/// One time slice of a [`PathInH`].
#[derive(Debug, Clone)]
pub struct PathSample {
    pub t: f64,
    pub phi: InvariantPotential,
    pub phi_dot: ScalarField,
    pub phi_ddot: ScalarField,
}

/// Point `φ_t` and velocity `φ̇_t` of the geodesic from `u0` to `u1`.
pub fn h_geodesic(u0: &SymplecticPotential, u1: &SymplecticPotential, t: f64) -> Result<(InvariantPotential, ScalarField)> {
    let s = PathInH::Geodesic { u0: u0.clone(), u1: u1.clone() }.at(t)?;
    Ok((s.phi, s.phi_dot))
}

fn difference(u0: &SymplecticPotential, u1: &SymplecticPotential) -> Vec<f64> {
    let (a, b) = (u0.correction(), u1.correction());
    (0..a.len().max(b.len())).map(|i| a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).collect()
}

impl PathInH {
    pub fn geodesic(u0: &SymplecticPotential, u1: &SymplecticPotential) -> Self {
        PathInH::Geodesic { u0: u0.clone(), u1: u1.clone() }
    }

    pub fn perturbed(self, eps: f64, profile: Profile) -> Self {
        PathInH::Perturbed { base: Box::new(self), eps, profile }
    }

    pub fn at(&self, t: f64) -> Result<PathSample> {
        if !t.is_finite() {
            return Err(Error::domain("path time", t));
        }
        Ok(match self {
            PathInH::Geodesic { u0, u1 } => {
                let ut = Arc::new(SymplecticPotential::interpolate(u0, u1, t)?);
                let w = difference(u0, u1);
                PathSample {
                    t,
                    phi: legendre(&ut),
                    phi_dot: ScalarField::OnMoment { chart: ut.clone(), h: PFunction::Poly(w.clone()) },
                    phi_ddot: ScalarField::OnMoment { chart: ut, h: PFunction::GradSquared(w) },
                }
            }
            PathInH::Linear { phi0, phi1 } => PathSample {
                t,
                phi: InvariantPotential::combine(&[(1.0 - t, phi0), (t, phi1)])?,
                phi_dot: ScalarField::lin(1.0, ScalarField::Phi(phi1.clone()), -1.0, ScalarField::Phi(phi0.clone())),
                phi_ddot: ScalarField::Constant(0.0),
            },
            PathInH::Perturbed { base, eps, profile } => {
                let b = base.at(t)?;
                PathSample {
                    t,
                    phi: profile.add(&b.phi, eps * t * (1.0 - t))?,
                    phi_dot: ScalarField::lin(1.0, b.phi_dot, 1.0, profile.field(eps * (1.0 - 2.0 * t))),
                    phi_ddot: ScalarField::lin(1.0, b.phi_ddot, 1.0, profile.field(-2.0 * eps)),
                }
            }
            PathInH::Constant(phi) => PathSample {
                t,
                phi: phi.clone(),
                phi_dot: ScalarField::Constant(0.0),
                phi_ddot: ScalarField::Constant(0.0),
            },
        })
    }

    /// Samples on the uniform grid `i / (n - 1)`.
    pub fn sample(&self, n: usize) -> Result<Vec<PathSample>> {
        if n < 2 {
            return Err(Error::contract("a sampled path needs at least two times"));
        }
        (0..n).map(|i| self.at(i as f64 / (n - 1) as f64)).collect()
    }
}

/// Time samples used by [`geodesic_residual`].
pub const RESIDUAL_TIMES: usize = 33;
/// Number of interior moment-grid points used by [`geodesic_residual`].
pub const RESIDUAL_POINTS: usize = 2049;

/// `sup |(φ̈ - |∇φ̇|²) ψ''/ψ_FS''|` over a 33-point time grid and the x-grid `logit(i/2050)`.
pub fn geodesic_residual(path: &PathInH) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in path.sample(RESIDUAL_TIMES)? {
        for i in 1..=RESIDUAL_POINTS {
            let q = i as f64 / (RESIDUAL_POINTS + 1) as f64;
            let x = logit(q);
            let d2 = s.phi.jet(x).d2;
            let v = s.phi_dot.jet(x)[1];
            let acc = s.phi_ddot.value(x);
            worst = worst.max(((acc * d2 - v * v) / (q * (1.0 - q))).abs());
        }
    }
    Ok(worst)
}

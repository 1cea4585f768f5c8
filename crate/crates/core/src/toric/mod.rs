//! S¹-invariant Kähler potentials on CP¹ in the class of O(1).
//!
//! A potential is described either on the x = log|z|² side by a convex
//! function `ψ(x)` with `φ = ψ - log(1 + e^x)`, or on the moment side by its
//! symplectic potential `u(p) = u_FS(p) + f(p)`, the Legendre dual of `ψ`.
//! The volume form `dμ = ψ'' dx` pushes forward to Lebesgue measure on
//! `(0, 1)` and every functional is evaluated through that substitution.

mod field;
mod functionals;
mod path;
mod potential;

pub use field::{PFunction, ScalarField};
pub use functionals::{
    calabi_energy, d_e, grad_norm_sq, h_distance, i_functional, i_functional_path, k_energy,
    k_energy_path, laplacian, scalar_curvature, volume_measure,
};
pub use path::{geodesic_residual, h_geodesic, PathInH, PathSample, Profile};
pub use potential::{legendre, Component, InvariantPotential, Jet, MeasurePoint};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest admissible degree of the correction polynomial.
pub const MAX_DEGREE: usize = 12;
/// Number of interior grid points on which `u'' > 0` is verified.
pub const CONVEXITY_GRID: usize = 2049;
/// Bound on the C⁴ norm of the correction.
pub const C4_BOUND: f64 = 1e3;

/// Value and first four derivatives of a polynomial `Σ a_m p^m`.
pub(crate) fn poly_jet(a: &[f64], p: f64) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (m, &c) in a.iter().enumerate().rev() {
        // Horner on each derivative
        for d in (0..5).rev() {
            if m >= d {
                let mut fall = 1.0;
                for r in 0..d {
                    fall *= (m - r) as f64;
                }
                out[d] += c * fall * p.powi((m - d) as i32);
            }
        }
    }
    out
}

pub(crate) fn poly_integral_unit(a: &[f64]) -> f64 {
    a.iter().enumerate().map(|(m, c)| c / (m + 1) as f64).sum()
}

/// Coefficient serialization of a symplectic potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    /// `c_1 .. c_m`, the coefficients of `p, p², ...`.
    #[serde(default)]
    pub coeffs: Vec<f64>,
    /// Additive constant `c_0`; `u - c` corresponds to `φ + c`.
    #[serde(default)]
    pub constant: f64,
}

/// `u(p) = p log p + (1 - p) log(1 - p) + f(p)` with polynomial `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpec", into = "PotentialSpec")]
pub struct SymplecticPotential {
    /// Full coefficient vector of `f`, constant term first.
    f: Vec<f64>,
    /// Upper bound for `|f'|` on `[0, 1]`.
    fp_sup: f64,
}

impl From<SymplecticPotential> for PotentialSpec {
    fn from(u: SymplecticPotential) -> Self {
        PotentialSpec { coeffs: u.f[1..].to_vec(), constant: u.f[0] }
    }
}

impl TryFrom<PotentialSpec> for SymplecticPotential {
    type Error = Error;
    fn try_from(s: PotentialSpec) -> Result<Self> {
        SymplecticPotential::new(s.constant, &s.coeffs)
    }
}

impl SymplecticPotential {
    /// Validates `coeffs = [c_1, .., c_m]`, `m ≤ 12`, plus a constant term.
    pub fn new(constant: f64, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() > MAX_DEGREE {
            return Err(Error::contract(format!("correction degree {} exceeds {MAX_DEGREE}", coeffs.len())));
        }
        if let Some(bad) = coeffs.iter().chain([&constant]).find(|c| !c.is_finite()) {
            return Err(Error::domain("non-finite correction coefficient", *bad));
        }
        let mut f = Vec::with_capacity(coeffs.len() + 1);
        f.push(constant);
        f.extend_from_slice(coeffs);
        let mut c4: f64 = 0.0;
        let mut fp_sup: f64 = 0.0;
        for i in 0..=CONVEXITY_GRID + 1 {
            let p = i as f64 / (CONVEXITY_GRID + 1) as f64;
            let j = poly_jet(&f, p);
            c4 = j.iter().fold(c4, |m, v| m.max(v.abs()));
            fp_sup = fp_sup.max(j[1].abs());
            if i == 0 || i == CONVEXITY_GRID + 1 {
                continue;
            }
            let d = 1.0 + p * (1.0 - p) * j[2];
            if !(d > 0.0) {
                return Err(Error::domain(
                    format!("u'' <= 0 at p = {p:.6} for correction coefficients {coeffs:?}"),
                    d / (p * (1.0 - p)),
                ));
            }
        }
        if c4 > C4_BOUND {
            return Err(Error::domain(format!("C4 norm of correction {coeffs:?} exceeds {C4_BOUND}"), c4));
        }
        // grid spacing times sup|f''| covers the gap between grid points
        let f2_sup = (0..=64).map(|i| poly_jet(&f, i as f64 / 64.0)[2].abs()).fold(0.0, f64::max);
        Ok(Self { f, fp_sup: fp_sup + f2_sup / 64.0 + 1e-12 })
    }

    /// Fubini–Study, `f = 0`.
    pub fn fubini_study() -> Self {
        Self { f: vec![0.0], fp_sup: 1e-12 }
    }

    pub fn with_coeffs(coeffs: &[f64]) -> Result<Self> {
        Self::new(0.0, coeffs)
    }

    pub fn constant(&self) -> f64 {
        self.f[0]
    }

    /// `c_1 .. c_m`.
    pub fn coeffs(&self) -> &[f64] {
        &self.f[1..]
    }

    /// Correction coefficients, constant term first.
    pub fn correction(&self) -> &[f64] {
        &self.f
    }

    pub fn is_fubini_study(&self) -> bool {
        self.f.iter().all(|&c| c == 0.0)
    }

    /// `u - c`, the potential of `φ + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.f[0] -= c;
        out
    }

    /// `(1 - t) u0 + t u1`; admissible whenever both ends are.
    pub fn interpolate(u0: &Self, u1: &Self, t: f64) -> Result<Self> {
        let n = u0.f.len().max(u1.f.len());
        let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        let f: Vec<f64> = (0..n).map(|i| (1.0 - t) * at(&u0.f, i) + t * at(&u1.f, i)).collect();
        if (0.0..=1.0).contains(&t) {
            let fp_sup = (1.0 - t) * u0.fp_sup + t * u1.fp_sup;
            return Ok(Self { f, fp_sup });
        }
        Self::new(f[0], &f[1..])
    }

    /// Value and derivatives of the correction `f`.
    pub fn f_jet(&self, p: f64) -> [f64; 5] {
        poly_jet(&self.f, p)
    }

    pub fn value(&self, p: f64) -> f64 {
        let ent = |s: f64| if s > 0.0 { s * s.ln() } else { 0.0 };
        ent(p) + ent(1.0 - p) + self.f_jet(p)[0]
    }

    /// `u'(p) = log(p / (1 - p)) + f'(p)`.
    pub fn derivative(&self, p: f64) -> f64 {
        (p / (1.0 - p)).ln() + self.f_jet(p)[1]
    }

    pub fn second_derivative(&self, p: f64) -> f64 {
        1.0 / (p * (1.0 - p)) + self.f_jet(p)[2]
    }

    /// `g = 1/u''` and its first two p-derivatives.
    pub fn inverse_hessian(&self, p: f64) -> [f64; 3] {
        self.inverse_hessian_split(p, 1.0 - p)
    }

    /// [`Self::inverse_hessian`] given `p` and an accurate `1 - p`.
    pub(crate) fn inverse_hessian_split(&self, p: f64, pc: f64) -> [f64; 3] {
        let fj = self.f_jet(p);
        let (q, q1, q2) = (p * pc, pc - p, -2.0);
        let d = 1.0 + q * fj[2];
        let d1 = q1 * fj[2] + q * fj[3];
        let d2 = q2 * fj[2] + 2.0 * q1 * fj[3] + q * fj[4];
        let num = q1 * d - q * d1;
        let g = q / d;
        let g1 = num / (d * d);
        let g2 = (q2 * d - q * d2) / (d * d) - 2.0 * d1 * num / (d * d * d);
        [g, g1, g2]
    }

    /// Scalar curvature `S(p) = -(1/u'')''`.
    pub fn scalar_curvature(&self, p: f64) -> f64 {
        -self.inverse_hessian(p)[2]
    }

    /// Minimum of `p(1 - p) u''(p) = 1 + p(1 - p) f''(p)` over the validation grid.
    pub fn min_convexity(&self) -> f64 {
        (1..=CONVEXITY_GRID)
            .map(|i| {
                let p = i as f64 / (CONVEXITY_GRID + 1) as f64;
                1.0 + p * (1.0 - p) * self.f_jet(p)[2]
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Moment coordinate `p` with `u'(p) = x`, returned as `(p, 1 - p)`.
    pub fn moment(&self, x: f64) -> (f64, f64) {
        let y = self.logit_moment(x);
        (crate::numerics::logistic(y), crate::numerics::logistic(-y))
    }

    /// Solves `y + f'(σ(y)) = x` for `y = logit p`.
    pub(crate) fn logit_moment(&self, x: f64) -> f64 {
        use crate::numerics::logistic;
        if self.f.len() < 2 || self.f[1..].iter().all(|&c| c == 0.0) {
            return x;
        }
        let (mut lo, mut hi) = (x - self.fp_sup - 1.0, x + self.fp_sup + 1.0);
        let mut y = (x - self.f_jet(logistic(x))[1]).clamp(lo, hi);
        let mut last_step = hi - lo;
        for _ in 0..200 {
            let p = logistic(y);
            let fj = self.f_jet(p);
            let r = y + fj[1] - x;
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let slope = 1.0 + fj[2] * p * logistic(-y);
            let newton = y - r / slope;
            // bisect when Newton leaves the bracket or stops halving its step
            let next = if newton > lo && newton < hi && (2.0 * r).abs() <= (last_step * slope).abs() {
                newton
            } else {
                0.5 * (lo + hi)
            };
            last_step = (next - y).abs();
            y = next;
            if last_step <= 1e-15 * y.abs().max(1.0) || hi - lo <= 1e-15 * y.abs().max(1.0) {
                break;
            }
        }
        y
    }
}

/// Smallest `p(1 - p) u''(p)` accepted by [`random_potential`].
pub const RANDOM_MIN_CONVEXITY: f64 = 0.05;

/// A random admissible potential with `degree` uniformly drawn coefficients in
/// `[-scale, scale]` (constant term zero), redrawn until admissible with
/// convexity margin at least [`RANDOM_MIN_CONVEXITY`].
pub fn random_potential<R: rand::Rng>(rng: &mut R, degree: usize, scale: f64) -> SymplecticPotential {
    loop {
        let coeffs: Vec<f64> = (0..degree.min(MAX_DEGREE)).map(|_| rng.gen_range(-scale..=scale)).collect();
        if let Ok(u) = SymplecticPotential::with_coeffs(&coeffs) {
            if u.min_convexity() >= RANDOM_MIN_CONVEXITY {
                return u;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_inversion_escapes_newton_cycles() {
        // plain Newton cycles between y ≈ -0.81 and y ≈ 5.9 here
        let u = SymplecticPotential::with_coeffs(&[
            0.14252493347826656,
            -0.5578836857096405,
            -0.42474324436964006,
            0.5654096680141717,
            0.49402036846829545,
            0.578356801344864,
        ])
        .unwrap();
        for i in 0..=400 {
            let x = -10.0 + 0.05 * i as f64;
            let (p, _) = u.moment(x);
            assert!((u.derivative(p) - x).abs() < 1e-9, "x = {x}, p = {p}");
        }
    }

    #[test]
    fn polynomial_jet_matches_hand_derivatives() {
        // 1 + 2p + 3p^2 + p^4
        let j = poly_jet(&[1.0, 2.0, 3.0, 0.0, 1.0], 0.5);
        assert!((j[0] - (1.0 + 1.0 + 0.75 + 0.0625)).abs() < 1e-15);
        assert!((j[1] - (2.0 + 3.0 + 0.5)).abs() < 1e-15);
        assert!((j[2] - (6.0 + 3.0)).abs() < 1e-15);
        assert!((j[3] - 12.0).abs() < 1e-15);
        assert!((j[4] - 24.0).abs() < 1e-15);
        assert!((poly_integral_unit(&[1.0, 2.0, 3.0]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn fubini_study_curvature_is_two() {
        let u = SymplecticPotential::fubini_study();
        for p in [1e-6, 0.1, 0.5, 0.93] {
            assert!((u.scalar_curvature(p) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_matches_symbolic_value() {
        // u = u_FS + 0.1 p^2 (1-p)^2, S(1/2) = 3440/1521 symbolically
        let u = SymplecticPotential::with_coeffs(&[0.0, 0.1, -0.2, 0.1]).unwrap();
        assert!((u.scalar_curvature(0.5) - 3440.0 / 1521.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_convex_and_oversized_corrections() {
        let err = SymplecticPotential::with_coeffs(&[0.0, -3.0]).unwrap_err();
        match err {
            Error::Domain { what, .. } => assert!(what.contains("[0.0, -3.0]"), "{what}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SymplecticPotential::with_coeffs(&[0.0; 13]).is_err());
        assert!(SymplecticPotential::with_coeffs(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0]).is_err());
        assert!(SymplecticPotential::with_coeffs(&[f64::NAN]).is_err());
    }

    #[test]
    fn moment_inverts_derivative() {
        let u = SymplecticPotential::with_coeffs(&[0.3, 0.5, -0.4, 0.2]).unwrap();
        for p in [1e-9, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            let (q, qc) = u.moment(u.derivative(p));
            assert!((q - p).abs() < 1e-12 * p.max(1e-3), "p = {p}: {q}");
            assert!((qc - (1.0 - p)).abs() < 1e-9 * (1.0 - p));
        }
    }

    #[test]
    fn spec_round_trip_through_json() {
        let u: SymplecticPotential = serde_json::from_str(r#"{"coeffs": [0.0, 0.2, -0.4, 0.2]}"#).unwrap();
        assert_eq!(u.coeffs(), &[0.0, 0.2, -0.4, 0.2]);
        let back: SymplecticPotential = serde_json::from_str(&serde_json::to_string(&u).unwrap()).unwrap();
        assert_eq!(u, back);
        assert!(serde_json::from_str::<SymplecticPotential>(r#"{"coeffs": [0.0, -3.0]}"#).is_err());
    }
}

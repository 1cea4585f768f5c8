use super::{poly_integral_unit, InvariantPotential, ScalarField, SymplecticPotential};
use crate::error::Result;
use crate::numerics::{gauss_legendre, QuadratureSpec};

/// Nodes of the rule used for integrals along `s ↦ FS + sφ`.
const PATH_NODES: usize = 17;

/// Density `ψ''(x)` of `dμ_φ` with respect to `dx`.
pub fn volume_measure(phi: &InvariantPotential, x: f64) -> f64 {
    phi.jet(x).d2
}

/// Scalar curvature of `ω_φ` at `x`.
pub fn scalar_curvature(phi: &InvariantPotential, x: f64) -> f64 {
    phi.jet(x).scalar_curvature()
}

/// `Δg = g''/ψ''`.
pub fn laplacian(phi: &InvariantPotential, g: &ScalarField, x: f64) -> f64 {
    g.jet(x)[2] / phi.jet(x).d2
}

/// `|∇g|² = g'²/ψ''`.
pub fn grad_norm_sq(phi: &InvariantPotential, g: &ScalarField, x: f64) -> f64 {
    let d = g.jet(x)[1];
    d * d / phi.jet(x).d2
}

/// `d_H(φ0, φ1) = (∫ (u1 - u0)² dp)^{1/2}`.
pub fn h_distance(u0: &SymplecticPotential, u1: &SymplecticPotential) -> f64 {
    let (a, b) = (u0.correction(), u1.correction());
    let n = a.len().max(b.len());
    let d: Vec<f64> = (0..n).map(|i| b.get(i).copied().unwrap_or(0.0) - a.get(i).copied().unwrap_or(0.0)).collect();
    let mut sq = vec![0.0; 2 * n - 1];
    for (i, x) in d.iter().enumerate() {
        for (j, y) in d.iter().enumerate() {
            sq[i + j] += x * y;
        }
    }
    poly_integral_unit(&sq).max(0.0).sqrt()
}

/// `I(φ)`, normalized by `I(FS) = 0`, from the Legendre identity `I = -∫ (u - u_FS) dp`.
pub fn i_functional(phi: &InvariantPotential, spec: &QuadratureSpec) -> Result<f64> {
    if let Some(u) = phi.as_toric() {
        return Ok(-poly_integral_unit(u.correction()));
    }
    // ∫ u dp = ∫ (x ψ' - ψ) dμ and ∫ u_FS dp = -1/2
    let int_u = phi.integrate_mu(|m| m.x * m.jet.d1 - m.jet.psi, spec)?.value;
    Ok(-(int_u + 0.5))
}

/// `I(φ) = ∫_0^1 ∫ φ dμ_{FS + sφ} ds`.
pub fn i_functional_path(phi: &InvariantPotential, spec: &QuadratureSpec) -> Result<f64> {
    let fs = InvariantPotential::fubini_study();
    along_scaling(phi, &fs, |phi_s| phi_s.integrate_mu(|m| phi.phi(m.x), spec).map(|i| i.value))
}

fn along_scaling(
    phi: &InvariantPotential,
    fs: &InvariantPotential,
    inner: impl Fn(&InvariantPotential) -> Result<f64>,
) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(PATH_NODES);
    let mut total = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let s = 0.5 * (x + 1.0);
        let phi_s = InvariantPotential::combine(&[(1.0 - s, fs), (s, phi)])?;
        total += 0.5 * w * inner(&phi_s)?;
    }
    Ok(total)
}

/// K-energy `E(φ)`, normalized by `E(FS) = 0`, from the toric closed form
/// `E = -∫ log(u''/u_FS'') dp + f(0) + f(1) - 2∫ f dp`, `f = u - u_FS`.
pub fn k_energy(phi: &InvariantPotential, spec: &QuadratureSpec) -> Result<f64> {
    if let Some(u) = phi.as_toric() {
        let f = u.correction();
        let log_term = phi.integrate_mu(|m| (m.jet.d1 * m.jet.d1c / m.jet.d2).ln(), spec)?.value;
        return Ok(-log_term + f[0] + f.iter().sum::<f64>() - 2.0 * poly_integral_unit(f));
    }
    let log_term = phi.integrate_mu(|m| (m.jet.d1 * m.jet.d1c / m.jet.d2).ln(), spec)?.value;
    let (lo, hi) = phi.phi_limits();
    Ok(-log_term - lo - hi + 2.0 * i_functional(phi, spec)?)
}

/// `E(φ) = -∫_0^1 ∫ (S_s - 2) φ dμ_{FS + sφ} ds`.
pub fn k_energy_path(phi: &InvariantPotential, spec: &QuadratureSpec) -> Result<f64> {
    let fs = InvariantPotential::fubini_study();
    let v = along_scaling(phi, &fs, |phi_s| {
        phi_s.integrate_mu(|m| (m.jet.scalar_curvature() - 2.0) * phi.phi(m.x), spec).map(|i| i.value)
    })?;
    Ok(-v)
}

/// Calabi energy `∫ (S - 2)² dμ`.
pub fn calabi_energy(phi: &InvariantPotential, spec: &QuadratureSpec) -> Result<f64> {
    if let Some(u) = phi.as_toric() {
        return Ok(crate::numerics::integrate_unit(|p| (u.scalar_curvature(p) - 2.0).powi(2), spec)?.value);
    }
    Ok(phi.integrate_mu(|m| (m.jet.scalar_curvature() - 2.0).powi(2), spec)?.value)
}

/// Differential of the K-energy, `-∫ (S - 2) δφ dμ`.
pub fn d_e(phi: &InvariantPotential, dphi: &ScalarField, spec: &QuadratureSpec) -> Result<f64> {
    Ok(-phi.integrate_mu(|m| (m.jet.scalar_curvature() - 2.0) * dphi.value(m.x), spec)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::{legendre, PathInH};

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn bumped() -> SymplecticPotential {
        // 0.2 p^2 (1-p)^2
        SymplecticPotential::with_coeffs(&[0.0, 0.2, -0.4, 0.2]).unwrap()
    }

    #[test]
    fn fubini_study_normalizations() {
        let fs = InvariantPotential::fubini_study();
        assert_eq!(i_functional(&fs, &spec()).unwrap(), 0.0);
        assert!(k_energy(&fs, &spec()).unwrap().abs() < 1e-14);
        assert!(calabi_energy(&fs, &spec()).unwrap() < 1e-20);
        assert!(d_e(&fs, &ScalarField::Logistic(1.0), &spec()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn constants_shift_i_and_leave_e_unchanged() {
        let phi = legendre(&bumped());
        let c = 0.37;
        let shifted = phi.plus_constant(c);
        let quant = InvariantPotential::quantized(3, vec![0.1, 0.2, -0.3, 0.0]).unwrap();
        for p in [&phi, &quant] {
            let i0 = i_functional(p, &spec()).unwrap();
            let i1 = i_functional(&p.plus_constant(c), &spec()).unwrap();
            assert!((i1 - i0 - c).abs() < 1e-10);
            let e0 = k_energy(p, &spec()).unwrap();
            let e1 = k_energy(&p.plus_constant(c), &spec()).unwrap();
            assert!((e1 - e0).abs() < 1e-10);
        }
        assert!((calabi_energy(&shifted, &spec()).unwrap() - calabi_energy(&phi, &spec()).unwrap()).abs() < 1e-14);
        assert!(d_e(&phi, &ScalarField::Constant(1.0), &spec()).unwrap().abs() < 1e-10);
    }

    #[test]
    fn closed_forms_agree_with_path_integrals() {
        let spec = spec();
        let phis = [
            legendre(&bumped()),
            legendre(&SymplecticPotential::new(0.2, &[0.3, -0.5, 0.4]).unwrap()),
            InvariantPotential::quantized(4, vec![0.0, 0.5, -0.2, 0.1, 0.3]).unwrap(),
        ];
        for phi in &phis {
            let (a, b) = (i_functional(phi, &spec).unwrap(), i_functional_path(phi, &spec).unwrap());
            assert!((a - b).abs() < 1e-9, "I: {a} vs {b}");
            let (a, b) = (k_energy(phi, &spec).unwrap(), k_energy_path(phi, &spec).unwrap());
            assert!((a - b).abs() < 1e-6, "E: {a} vs {b}");
        }
    }

    #[test]
    fn energy_of_bumped_potential_matches_symbolic_value() {
        // -∫ log(1 + p(1-p) f'') dp - 2∫ f dp at 30 digits
        let phi = legendre(&bumped());
        let e = k_energy(&phi, &spec()).unwrap();
        assert!((e - E_BUMPED).abs() < 1e-10, "{e}");
    }

    const E_BUMPED: f64 = 3.908_851_792_774_079e-4;

    #[test]
    fn calabi_energy_matches_symbolic_value() {
        let phi = legendre(&SymplecticPotential::with_coeffs(&[0.0, 0.1, -0.2, 0.1]).unwrap());
        let ca = calabi_energy(&phi, &spec()).unwrap();
        assert!((ca - CA_SMALL).abs() < 1e-8, "{ca}");
    }

    const CA_SMALL: f64 = 3.298_369_340_644_117e-2;

    #[test]
    fn differential_matches_finite_difference() {
        let phi = legendre(&bumped());
        let dir = ScalarField::Logistic(1.0);
        let h = 1e-4;
        let plus = k_energy(&phi.plus_logistic(h).unwrap(), &spec()).unwrap();
        let minus = k_energy(&phi.plus_logistic(-h).unwrap(), &spec()).unwrap();
        let d = d_e(&phi, &dir, &spec()).unwrap();
        assert!(((plus - minus) / (2.0 * h) - d).abs() < 1e-6);
    }

    #[test]
    fn laplacian_has_zero_mean_and_gradient_matches_hand_value() {
        let fs = InvariantPotential::fubini_study();
        let g = ScalarField::Logistic(1.0);
        let mean = fs.integrate_mu(|m| laplacian(&fs, &g, m.x), &spec()).unwrap().value;
        assert!(mean.abs() < 1e-9);
        let idx = ScalarField::custom(|x| [x, 1.0, 0.0]);
        for p in [0.2, 0.5, 0.8] {
            let x: f64 = crate::numerics::logit(p);
            assert!((grad_norm_sq(&fs, &idx, x) - (1.0 + x.exp()).powi(2) / x.exp()).abs() < 1e-12);
        }
        assert_eq!(laplacian(&fs, &ScalarField::Constant(3.0), 0.3), 0.0);
        let phi = legendre(&bumped());
        let mean = phi.integrate_mu(|m| laplacian(&phi, &g, m.x), &spec()).unwrap().value;
        assert!(mean.abs() < 1e-9);
    }

    #[test]
    fn distance_examples() {
        let fs = SymplecticPotential::fubini_study();
        assert!((h_distance(&fs, &fs.shifted(0.7)) - 0.7).abs() < 1e-15);
        let u1 = SymplecticPotential::with_coeffs(&[0.5, -0.5]).unwrap();
        assert!((h_distance(&fs, &u1) - 0.5 / 30f64.sqrt()).abs() < 1e-15);
        // constant-speed length of the geodesic
        let path = PathInH::geodesic(&fs, &u1);
        for t in [0.0, 0.3, 1.0] {
            let s = path.at(t).unwrap();
            let speed = s.phi.integrate_mu(|m| s.phi_dot.value(m.x).powi(2), &spec()).unwrap().value.sqrt();
            assert!((speed - h_distance(&fs, &u1)).abs() < 1e-8);
        }
    }

    #[test]
    fn volume_and_curvature_of_fubini_study() {
        let fs = InvariantPotential::fubini_study();
        let x: f64 = 0.4;
        assert!((volume_measure(&fs, x) - x.exp() / (1.0 + x.exp()).powi(2)).abs() < 1e-15);
        assert!((scalar_curvature(&fs, x) - 2.0).abs() < 1e-12);
    }
}

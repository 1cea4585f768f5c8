use super::{fs, fubini_study_log_hilb, hilb_log, log_diag_of, section_integrals, QuantLevel};
use crate::error::Result;
use crate::numerics::{pd_eig, QuadratureSpec};
use crate::symspace::HermitianForm;
use crate::toric::{i_functional, InvariantPotential};

/// `I_k = log det H` for `H = diag(e^{l})`.
pub fn i_k(log_h: &[f64]) -> f64 {
    log_h.iter().sum()
}

/// `log det H` for a general form.
pub fn i_k_form(h: &HermitianForm) -> Result<f64> {
    Ok(pd_eig(h.matrix())?.values.iter().map(|l| l.ln()).sum())
}

/// `L_k(φ) = I_k(Hilb_k φ) + k d_k I(φ)`.
pub fn l_raw(phi: &InvariantPotential, level: QuantLevel, spec: &QuadratureSpec) -> Result<f64> {
    let k = level.k() as f64;
    Ok(i_k(&hilb_log(phi, level, spec)?) + k * level.d() * i_functional(phi, spec)?)
}

/// `(2/k)(L_k(φ) - L_k(FS))`.
pub fn l_func(phi: &InvariantPotential, level: QuantLevel, spec: &QuadratureSpec) -> Result<f64> {
    let base = i_k(&fubini_study_log_hilb(level));
    Ok(2.0 / level.k() as f64 * (l_raw(phi, level, spec)? - base))
}

/// `Z_k(H) = k d_k I(FS_k H) + I_k(H) - d_k log d_k`.
pub fn z_raw(log_h: &[f64], level: QuantLevel, spec: &QuadratureSpec) -> Result<f64> {
    let k = level.k() as f64;
    let d = level.d();
    Ok(k * d * i_functional(&fs(log_h, level)?, spec)? + i_k(log_h) - d * d.ln())
}

/// `(2/k)(Z_k(H) - Z_k(Hilb_k FS))`; the base value equals `L_k(FS)` exactly.
pub fn z_func(log_h: &[f64], level: QuantLevel, spec: &QuadratureSpec) -> Result<f64> {
    let base = i_k(&fubini_study_log_hilb(level));
    Ok(2.0 / level.k() as f64 * (z_raw(log_h, level, spec)? - base))
}

/// [`z_func`] for a diagonal [`HermitianForm`].
pub fn z_func_form(h: &HermitianForm, level: QuantLevel, spec: &QuadratureSpec) -> Result<f64> {
    z_func(&log_diag_of(h, level)?, level, spec)
}

/// Gradient of [`z_func`] in the metric `Tr(A H⁻¹ B H⁻¹)`, as diagonal entries in an
/// `H`-orthonormal frame: `λ_i = -(2 d_k / k) ∫ (|s_i|²_{FS_k H} - 1/d_k) dμ_{FS_k H}`.
pub fn grad_z(log_h: &[f64], level: QuantLevel, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    let phi_h = fs(log_h, level)?;
    let d = level.d();
    let scale = -2.0 * d / level.k() as f64;
    let ints = section_integrals(&phi_h, level, spec, |_, _| 1.0)?;
    Ok(ints.iter().zip(log_h).map(|((s, v), l)| scale * ((s - l).exp() * v - 1.0 / d)).collect())
}

/// The trace-free integral `-(d_k / k) ∫ [(s_i, s_j)_{FS_k H}]_0 dμ_{FS_k H}`, half of [`grad_z`].
pub fn grad_z_printed(log_h: &[f64], level: QuantLevel, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    Ok(grad_z(log_h, level, spec)?.into_iter().map(|v| 0.5 * v).collect())
}

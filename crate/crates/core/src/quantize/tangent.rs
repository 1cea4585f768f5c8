use super::{form_from_log_diag, log_diag_of, section_integrals, QuantLevel};
use crate::error::{Error, Result};
use crate::numerics::QuadratureSpec;
use crate::symspace::{HermitianForm, TangentForm};
use crate::toric::{InvariantPotential, MeasurePoint, PathSample, ScalarField};

/// `E_j[G] = ∫ |s_j|² G dμ / ∫ |s_j|² dμ` for every section.
pub(crate) fn section_means(
    phi: &InvariantPotential,
    level: QuantLevel,
    spec: &QuadratureSpec,
    g: impl Fn(usize, &MeasurePoint) -> f64 + Sync,
) -> Result<Vec<f64>> {
    let norms = section_integrals(phi, level, spec, |_, _| 1.0)?;
    let vals = section_integrals(phi, level, spec, g)?;
    Ok(norms.iter().zip(&vals).map(|((_, n), (_, v))| v / n).collect())
}

/// `-k δφ + Δ_φ δφ` at a measure point.
fn t1_density(level: QuantLevel, m: &MeasurePoint, f: &ScalarField) -> f64 {
    let j = f.jet(m.x);
    -(level.k() as f64) * j[0] + j[2] / m.jet.d2
}

/// Variation of `Hilb_k` along `δφ`, as relative diagonal entries
/// `δH_jj / H_jj = E_j[-k δφ + Δδφ]` (the entries in an `H`-orthonormal frame).
pub fn d_hilb(phi: &InvariantPotential, level: QuantLevel, dphi: &ScalarField, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    section_means(phi, level, spec, |_, m| t1_density(level, m, dphi))
}

/// [`d_hilb`] as a tangent matrix at `Hilb_k(φ)`.
pub fn d_hilb_form(
    phi: &InvariantPotential,
    level: QuantLevel,
    dphi: &ScalarField,
    spec: &QuadratureSpec,
) -> Result<(HermitianForm, TangentForm)> {
    let log_h = super::hilb_log(phi, level, spec)?;
    let rel = d_hilb(phi, level, dphi, spec)?;
    let h = form_from_log_diag(&log_h)?;
    let dh: Vec<f64> = log_h.iter().zip(&rel).map(|(l, r)| l.exp() * r).collect();
    Ok((h, TangentForm::from_diagonal(&dh)))
}

/// Second time derivative of `log Hilb_k(φ_t)_jj` along a path:
/// `Var_j(A) + E_j[-k φ̈ + Δφ̈ - (Δφ̇)²]` with `A = -k φ̇ + Δφ̇`.
pub fn hilb_log_accel(sample: &PathSample, level: QuantLevel, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    let mean_a = d_hilb(&sample.phi, level, &sample.phi_dot, spec)?;
    let k = level.k() as f64;
    section_means(&sample.phi, level, spec, |j, m| {
        let v = sample.phi_dot.jet(m.x);
        let acc = sample.phi_ddot.jet(m.x);
        let lap_v = v[2] / m.jet.d2;
        let a = -k * v[0] + lap_v;
        let c = a - mean_a[j];
        c * c - lap_v * lap_v - k * acc[0] + acc[2] / m.jet.d2
    })
}

/// Variation of `FS_k` at `H = diag(e^{l})` along a diagonal `δH` given by
/// `rel_i = δH_ii / H_ii`: `-(1/k) Σ_i rel_i |s_i|²_{FS_k(H)}`.
pub fn d_fs(log_h: &[f64], level: QuantLevel, rel: &[f64]) -> Result<ScalarField> {
    if log_h.len() != level.n() || rel.len() != level.n() {
        return Err(Error::contract(format!("expected {} entries", level.n())));
    }
    let (lh, r) = (log_h.to_vec(), rel.to_vec());
    let k = level.k() as f64;
    Ok(ScalarField::custom(move |x| {
        let a: Vec<f64> = lh.iter().enumerate().map(|(j, l)| j as f64 * x - l).collect();
        let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = a.iter().map(|v| (v - m).exp()).collect();
        let z: f64 = w.iter().sum();
        let mean_j = w.iter().enumerate().map(|(j, w)| j as f64 * w).sum::<f64>() / z;
        let mean_r = w.iter().zip(&r).map(|(w, r)| w * r).sum::<f64>() / z;
        let (mut c1, mut c2) = (0.0, 0.0);
        for (j, (wj, rj)) in w.iter().zip(&r).enumerate() {
            let dj = j as f64 - mean_j;
            c1 += wj * (rj - mean_r) * dj;
            c2 += wj * (rj - mean_r) * dj * dj;
        }
        [-mean_r / k, -c1 / z / k, -c2 / z / k]
    }))
}

/// [`d_fs`] for diagonal forms; non-diagonal `H` or `δH` are refused.
pub fn d_fs_form(h: &HermitianForm, level: QuantLevel, dh: &TangentForm) -> Result<ScalarField> {
    let log_h = log_diag_of(h, level)?;
    let n = level.n();
    if dh.dim() != n || (0..n).any(|i| (0..n).any(|j| i != j && dh.matrix()[(i, j)].norm() != 0.0)) {
        return Err(Error::contract("only diagonal variations stay in the S1-invariant model"));
    }
    let rel: Vec<f64> = (0..n).map(|i| dh.matrix()[(i, i)].re / h.matrix()[(i, i)].re).collect();
    d_fs(&log_h, level, &rel)
}

/// `k⁻¹ Σ_{i,j} |∫ (s_i, s_j) ψ dμ|²` for an invariant test function, `s_i` orthonormal
/// for `Hilb_k(φ)`; off-diagonal pairings vanish by invariance.
pub fn eq_k_sum(phi: &InvariantPotential, level: QuantLevel, test: &ScalarField, spec: &QuadratureSpec) -> Result<f64> {
    let means = section_means(phi, level, spec, |_, m| test.value(m.x))?;
    Ok(means.iter().map(|v| v * v).sum::<f64>() / level.k() as f64)
}

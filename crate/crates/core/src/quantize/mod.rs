//! Quantization of invariant potentials on CP¹ at level `k`.
//!
//! Sections of `O(k)` are spanned by the monomials `z^j`, `j = 0..=k`. For an
//! S¹-invariant potential the L² inner product is diagonal in that basis, so a
//! Hermitian form is stored by its log-diagonal `l_j = log H_jj`; entries span
//! hundreds of orders of magnitude at large `k` and are only ever handled in
//! log space. Helpers convert to [`HermitianForm`] where the conditioning allows.

mod functionals;
mod tangent;

pub use functionals::{
    grad_z, grad_z_printed, i_k, i_k_form, l_func, l_raw, z_func, z_func_form, z_raw,
};
pub use tangent::{d_fs, d_fs_form, d_hilb, d_hilb_form, eq_k_sum, hilb_log_accel};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, QuadratureSpec};
use crate::symspace::HermitianForm;
use crate::toric::{InvariantPotential, MeasurePoint, SymplecticPotential};

/// Largest supported level.
pub const MAX_K: usize = 4096;
/// Grid used to locate the peak of each section's weight before integrating.
const PEAK_GRID: usize = 1024;

/// Quantization level `k` with `N_k = d_k = k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantLevel {
    k: usize,
}

impl QuantLevel {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_K {
            return Err(Error::contract(format!("quantization level must lie in 1..={MAX_K}, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn k(self) -> usize {
        self.k
    }

    /// Number of sections `N_k`.
    pub fn n(self) -> usize {
        self.k + 1
    }

    /// `d_k = dim H⁰(O(k))`.
    pub fn d(self) -> f64 {
        (self.k + 1) as f64
    }

    fn kf(self) -> f64 {
        self.k as f64
    }
}

/// `log(j! (k - j)! / (k + 1)!)`, the log-diagonal of `Hilb_k(FS)`.
pub fn fubini_study_log_hilb(level: QuantLevel) -> Vec<f64> {
    let k = level.k();
    let mut lf = vec![0.0; k + 2];
    for i in 1..=k + 1 {
        lf[i] = lf[i - 1] + (i as f64).ln();
    }
    (0..=k).map(|j| lf[j] + lf[k - j] - lf[k + 1]).collect()
}

/// Per-section weighted integrals `∫ e^{jx - kψ} G dμ`, each returned as `(shift, value)`
/// with the true integral `e^{shift}·value`. The shift is the peak of the weight.
pub(crate) fn section_integrals(
    phi: &InvariantPotential,
    level: QuantLevel,
    spec: &QuadratureSpec,
    g: impl Fn(usize, &MeasurePoint) -> f64 + Sync,
) -> Result<Vec<(f64, f64)>> {
    let toric = phi.as_toric();
    let k = level.kf();
    let log_weight = |j: usize, m: &MeasurePoint, jac: f64| j as f64 * m.x - k * m.jet.psi + jac.ln();
    let grid: Vec<(MeasurePoint, f64, f64)> = (0..PEAK_GRID)
        .map(|i| {
            let q = (i as f64 + 0.5) / PEAK_GRID as f64;
            let (m, jac) = phi.chart_point(toric.as_ref(), q);
            (m, jac, q)
        })
        .collect();
    (0..=level.k())
        .into_par_iter()
        .map(|j| {
            let (mut shift, mut peak) = (f64::NEG_INFINITY, 0.5);
            for (m, jac, q) in &grid {
                let w = log_weight(j, m, *jac);
                if w > shift {
                    shift = w;
                    peak = *q;
                }
            }
            if !shift.is_finite() {
                return Err(Error::domain(format!("section {j} has no finite weight"), shift));
            }
            let h = |m: &MeasurePoint, jac: f64| (log_weight(j, m, jac) - shift).exp() * g(j, m);
            let cell = 1.0 / PEAK_GRID as f64;
            let breaks = [peak - 2.0 * cell, peak, peak + 2.0 * cell];
            let v = phi.integrate_chart(h, toric.as_ref(), spec, &breaks)?.value;
            Ok((shift, v))
        })
        .collect()
}

/// `log Hilb_k(φ)_jj = log ∫ e^{jx - kψ} dμ_φ`.
pub fn hilb_log(phi: &InvariantPotential, level: QuantLevel, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    section_integrals(phi, level, spec, |_, _| 1.0)?
        .into_iter()
        .map(|(s, v)| {
            if v > 0.0 {
                Ok(s + v.ln())
            } else {
                Err(Error::domain("Hilbert norm integral is not positive", v))
            }
        })
        .collect()
}

/// `Hilb_k(φ)` as a Hermitian form; fails when the entries are too ill-conditioned
/// for [`HermitianForm`] (roughly `k > 40`).
pub fn hilb(phi: &InvariantPotential, level: QuantLevel, spec: &QuadratureSpec) -> Result<HermitianForm> {
    form_from_log_diag(&hilb_log(phi, level, spec)?)
}

pub fn form_from_log_diag(log_h: &[f64]) -> Result<HermitianForm> {
    HermitianForm::from_diagonal(&log_h.iter().map(|l| l.exp()).collect::<Vec<_>>())
}

/// Log-diagonal of a diagonal form; anything else is refused.
pub fn log_diag_of(h: &HermitianForm, level: QuantLevel) -> Result<Vec<f64>> {
    if h.dim() != level.n() {
        return Err(Error::contract(format!("form has dimension {}, level {} needs {}", h.dim(), level.k(), level.n())));
    }
    if !h.is_diagonal() {
        return Err(Error::contract("only diagonal forms stay in the S1-invariant model"));
    }
    Ok((0..h.dim()).map(|i| h.matrix()[(i, i)].re.ln()).collect())
}

/// `FS_k(H)` for `H = diag(e^{l_j})`: `ψ = (1/k) log Σ_j e^{jx - l_j}`.
pub fn fs(log_h: &[f64], level: QuantLevel) -> Result<InvariantPotential> {
    if log_h.len() != level.n() {
        return Err(Error::contract(format!("expected {} log-diagonal entries, got {}", level.n(), log_h.len())));
    }
    InvariantPotential::quantized(level.k(), log_h.to_vec())
}

/// [`fs`] for a diagonal [`HermitianForm`].
pub fn fs_form(h: &HermitianForm, level: QuantLevel) -> Result<InvariantPotential> {
    fs(&log_diag_of(h, level)?, level)
}

/// Bergman density `ρ_k(φ)(x) = Σ_j e^{jx - kψ(x)} / Hilb_k(φ)_jj`.
#[derive(Debug, Clone)]
pub struct BergmanDensity {
    level: QuantLevel,
    phi: InvariantPotential,
    log_h: Vec<f64>,
}

impl BergmanDensity {
    pub fn level(&self) -> QuantLevel {
        self.level
    }

    pub fn log_hilb(&self) -> &[f64] {
        &self.log_h
    }

    pub fn log_value(&self, x: f64) -> f64 {
        let kpsi = self.level.kf() * self.phi.psi(x);
        log_sum_exp(self.log_h.iter().enumerate().map(|(j, l)| j as f64 * x - kpsi - l))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.log_value(x).exp()
    }

    /// `∫ ρ_k dμ_φ`.
    pub fn mass(&self, spec: &QuadratureSpec) -> Result<f64> {
        Ok(self.phi.integrate_mu(|m| self.value(m.x), spec)?.value)
    }
}

pub fn bergman_density(phi: &InvariantPotential, level: QuantLevel, spec: &QuadratureSpec) -> Result<BergmanDensity> {
    Ok(BergmanDensity { level, phi: phi.clone(), log_h: hilb_log(phi, level, spec)? })
}

/// Convenience: `Hilb_k` of the Legendre dual of `u`.
pub fn hilb_log_of(u: &SymplecticPotential, level: QuantLevel, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    hilb_log(&crate::toric::legendre(u), level, spec)
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConvergenceReport, ReportRow, RowMode, StudyConfig, StudyError, StudyKind};
use crate::numerics::{QuadratureSpec, SampledPath};
use crate::quantize::{
    bergman_density, d_hilb, fs, fubini_study_log_hilb, grad_z, hilb, hilb_log, hilb_log_accel, hilb_log_of, i_k,
    l_func, z_func, QuantLevel,
};
use crate::symspace::{angle_from_sides, log_diag_distance, near_geodesic_check};
use crate::toric::{
    calabi_energy, d_e, grad_norm_sq, h_distance, h_geodesic, i_functional, k_energy, legendre, random_potential,
    scalar_curvature, PathInH, Profile, SymplecticPotential,
};

/// Smallest and largest admissible quantization levels.
pub const K_RANGE: (usize, usize) = (4, 256);
/// Largest level for the near-geodesic study, so that `N_k ≤ 16`.
pub const LEMMAS_MAX_K: usize = 15;
/// Largest measured acceleration accepted for a near-geodesic sample.
pub const LEMMAS_MAX_EPS: f64 = 0.1;
/// Number of points `logit(i / 66)` on which the density remainder is maximized.
pub const TYZ_POINTS: usize = 65;

/// Which path the time-dependent studies follow between `u0` and `u1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathChoice {
    /// The toric geodesic `u_t = (1 - t) u0 + t u1`.
    Geodesic,
    /// `φ_t = (1 - t) φ0 + t φ1`.
    Linear,
    /// `φ_t = φ0`.
    Constant,
}

/// Random inputs drawn for one sample of a randomized study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawnSample {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub potentials: Vec<SymplecticPotential>,
    /// Added to the log-diagonal of the second endpoint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_shift: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<(f64, Profile)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_eps: Option<f64>,
}

/// Fully resolved inputs of a study; every field that influences the result is listed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyInputs {
    pub kgrid: Vec<usize>,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<SymplecticPotential>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u1: Option<SymplecticPotential>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u2: Option<SymplecticPotential>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Inputs drawn from `seed`, filled in by [`run_study`].
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub drawn: Vec<DrawnSample>,
    /// Candidates discarded because their measured acceleration was too large.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejected: Option<usize>,
}

fn bump() -> SymplecticPotential {
    SymplecticPotential::with_coeffs(&[0.0, 0.2, -0.4, 0.2]).expect("admissible")
}

fn parabola() -> SymplecticPotential {
    SymplecticPotential::with_coeffs(&[0.5, -0.5]).expect("admissible")
}

fn skew() -> SymplecticPotential {
    SymplecticPotential::with_coeffs(&[0.0, 0.3, -0.3]).expect("admissible")
}

fn default_kgrid(kind: StudyKind) -> Vec<usize> {
    match kind {
        StudyKind::Tyz | StudyKind::Dzdt => vec![16, 32, 64, 128, 256],
        StudyKind::Sandwich | StudyKind::Zconvex => vec![8, 16, 32],
        StudyKind::Lemmas => vec![4, 8, 12, 15],
        StudyKind::Ineq1 | StudyKind::Ineq2 => vec![],
        _ => vec![8, 16, 32, 64, 128],
    }
}

fn default_tol(kind: StudyKind) -> f64 {
    match kind {
        StudyKind::Distance | StudyKind::Dzdt | StudyKind::Angle | StudyKind::Iquant => 0.05,
        StudyKind::Speed | StudyKind::Accel => 0.1,
        StudyKind::Gradient => 0.15,
        StudyKind::Tyz => 0.3,
        _ => 1e-7,
    }
}

/// Fills in the defaults of `cfg` and validates the result.
pub fn resolve(cfg: &StudyConfig, run_seed: Option<u64>) -> Result<StudyInputs, StudyError> {
    let kind = cfg.kind;
    let invalid = |message: String| StudyError::Invalid { study: kind, message };
    let mut inputs = StudyInputs {
        kgrid: cfg.kgrid.clone().unwrap_or_else(|| default_kgrid(kind)),
        tol: cfg.tol.unwrap_or_else(|| default_tol(kind)),
        u0: None,
        u1: None,
        u2: None,
        path: None,
        t: None,
        times: None,
        samples: None,
        degree: None,
        scale: None,
        eps: None,
        seed: None,
        drawn: Vec::new(),
        rejected: None,
    };
    let u0 = || cfg.u0.clone().unwrap_or_else(SymplecticPotential::fubini_study);
    let u1 = || cfg.u1.clone().unwrap_or_else(parabola);
    match kind {
        StudyKind::Distance => (inputs.u0, inputs.u1) = (Some(u0()), Some(u1())),
        StudyKind::Speed | StudyKind::Accel | StudyKind::Dzdt => {
            (inputs.u0, inputs.u1) = (Some(u0()), Some(u1()));
            inputs.path = Some(cfg.path.unwrap_or(PathChoice::Linear));
            inputs.t = Some(cfg.t.unwrap_or(0.5));
        }
        StudyKind::Gradient | StudyKind::Tyz | StudyKind::Iquant => {
            inputs.u0 = Some(cfg.u0.clone().unwrap_or_else(bump));
        }
        StudyKind::Angle => {
            (inputs.u0, inputs.u1) = (Some(u0()), Some(u1()));
            inputs.u2 = Some(cfg.u2.clone().unwrap_or_else(skew));
        }
        StudyKind::Ineq1 | StudyKind::Ineq2 => match (&cfg.u0, &cfg.u1) {
            (Some(a), Some(b)) => (inputs.u0, inputs.u1) = (Some(a.clone()), Some(b.clone())),
            (None, None) => {
                inputs.samples = Some(cfg.samples.unwrap_or(50));
                inputs.degree = Some(cfg.degree.unwrap_or(4));
                inputs.scale = Some(cfg.scale.unwrap_or(0.5));
            }
            _ => return Err(invalid("give both u0 and u1, or neither to sample random pairs".into())),
        },
        StudyKind::Sandwich => {
            inputs.samples = Some(cfg.samples.unwrap_or(20));
            inputs.degree = Some(cfg.degree.unwrap_or(4));
            inputs.scale = Some(cfg.scale.unwrap_or(0.5));
        }
        StudyKind::Zconvex => {
            inputs.samples = Some(cfg.samples.unwrap_or(50));
            inputs.times = Some(cfg.times.unwrap_or(17));
            inputs.degree = Some(cfg.degree.unwrap_or(4));
            inputs.scale = Some(cfg.scale.unwrap_or(0.5));
        }
        StudyKind::Lemmas => {
            inputs.samples = Some(cfg.samples.unwrap_or(500));
            inputs.times = Some(cfg.times.unwrap_or(33));
            inputs.degree = Some(cfg.degree.unwrap_or(3));
            inputs.scale = Some(cfg.scale.unwrap_or(0.05));
            inputs.eps = Some(cfg.eps.unwrap_or(0.002));
        }
    }
    if inputs.samples.is_some() {
        inputs.seed = Some(cfg.seed.or(run_seed).ok_or_else(|| invalid("a seed is required for randomly drawn inputs".into()))?);
    }
    let needs_k = !matches!(kind, StudyKind::Ineq1 | StudyKind::Ineq2);
    if needs_k && inputs.kgrid.is_empty() {
        return Err(invalid("empty k-grid".into()));
    }
    let max_k = if kind == StudyKind::Lemmas { LEMMAS_MAX_K } else { K_RANGE.1 };
    if let Some(k) = inputs.kgrid.iter().find(|&&k| k < K_RANGE.0 || k > max_k) {
        return Err(invalid(format!("k = {k} outside [{}, {max_k}]", K_RANGE.0)));
    }
    let mut sorted = inputs.kgrid.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != inputs.kgrid.len() {
        return Err(invalid("repeated k in the grid".into()));
    }
    inputs.kgrid = sorted;
    if !(inputs.tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {}", inputs.tol)));
    }
    if let Some(t) = inputs.t {
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid(format!("time {t} outside [0, 1]")));
        }
    }
    if inputs.times.is_some_and(|n| n < 5) {
        return Err(invalid("time grid needs at least 5 points".into()));
    }
    if inputs.samples == Some(0) {
        return Err(invalid("samples must be positive".into()));
    }
    if inputs.degree.is_some_and(|d| d == 0 || d > crate::toric::MAX_DEGREE) {
        return Err(invalid(format!("degree must lie in 1..={}", crate::toric::MAX_DEGREE)));
    }
    if inputs.scale.is_some_and(|s| !(s >= 0.0 && s.is_finite())) || inputs.eps.is_some_and(|e| !(e >= 0.0 && e.is_finite())) {
        return Err(invalid("scale and eps must be finite and non-negative".into()));
    }
    Ok(inputs)
}

struct Ctx {
    kind: StudyKind,
    spec: QuadratureSpec,
}

impl Ctx {
    fn at<T>(&self, k: Option<usize>, r: crate::Result<T>) -> Result<T, StudyError> {
        r.map_err(|source| StudyError::Numeric { study: self.kind, k, source })
    }

    fn level(&self, k: usize) -> Result<QuantLevel, StudyError> {
        self.at(Some(k), QuantLevel::new(k))
    }

    fn per_k(
        &self,
        kgrid: &[usize],
        f: impl Fn(usize, QuantLevel) -> crate::Result<f64> + Sync,
        limit: f64,
    ) -> Result<Vec<ReportRow>, StudyError> {
        kgrid
            .par_iter()
            .map(|&k| {
                let value = self.at(Some(k), f(k, self.level(k)?))?;
                Ok(ReportRow::new(self.kind.mode(), k, value, limit))
            })
            .collect()
    }
}

fn req(u: &Option<SymplecticPotential>) -> &SymplecticPotential {
    u.as_ref().expect("resolved study inputs")
}

fn build_path(choice: PathChoice, u0: &SymplecticPotential, u1: &SymplecticPotential) -> PathInH {
    match choice {
        PathChoice::Geodesic => PathInH::geodesic(u0, u1),
        PathChoice::Linear => PathInH::Linear { phi0: legendre(u0), phi1: legendre(u1) },
        PathChoice::Constant => PathInH::Constant(legendre(u0)),
    }
}

fn draw_potentials(rng: &mut ChaCha8Rng, inputs: &StudyInputs, count: usize) -> Vec<SymplecticPotential> {
    let (degree, scale) = (inputs.degree.unwrap_or(4), inputs.scale.unwrap_or(0.5));
    (0..count).map(|_| random_potential(rng, degree, scale)).collect()
}

/// Runs one study on resolved inputs.
pub fn run_study(kind: StudyKind, mut inputs: StudyInputs) -> Result<ConvergenceReport, StudyError> {
    let ctx = Ctx { kind, spec: QuadratureSpec::default() };
    let spec = &ctx.spec;
    let mut rng = ChaCha8Rng::seed_from_u64(inputs.seed.unwrap_or(0));
    let kgrid = inputs.kgrid.clone();
    let rows = match kind {
        StudyKind::Distance => {
            let (u0, u1) = (req(&inputs.u0), req(&inputs.u1));
            let limit = h_distance(u0, u1);
            ctx.per_k(&kgrid, |k, lv| {
                let d = log_diag_distance(&hilb_log_of(u0, lv, spec)?, &hilb_log_of(u1, lv, spec)?)?;
                Ok(d * (k as f64).powf(-1.5))
            }, limit)?
        }
        StudyKind::Speed | StudyKind::Accel | StudyKind::Dzdt => {
            let path = build_path(inputs.path.unwrap_or(PathChoice::Linear), req(&inputs.u0), req(&inputs.u1));
            let s = ctx.at(None, path.at(inputs.t.unwrap_or(0.5)))?;
            let limit = ctx.at(None, match kind {
                StudyKind::Speed => s.phi.integrate_mu(|m| s.phi_dot.value(m.x).powi(2), spec).map(|i| i.value),
                StudyKind::Accel => s
                    .phi
                    .integrate_mu(|m| (s.phi_ddot.value(m.x) - grad_norm_sq(&s.phi, &s.phi_dot, m.x)).powi(2), spec)
                    .map(|i| i.value),
                _ => d_e(&s.phi, &s.phi_dot, spec),
            })?;
            ctx.per_k(&kgrid, |k, lv| {
                let k3 = (k as f64).powi(3);
                Ok(match kind {
                    StudyKind::Speed => d_hilb(&s.phi, lv, &s.phi_dot, spec)?.iter().map(|v| v * v).sum::<f64>() / k3,
                    StudyKind::Accel => hilb_log_accel(&s, lv, spec)?.iter().map(|v| v * v).sum::<f64>() / k3,
                    _ => {
                        let g = grad_z(&hilb_log(&s.phi, lv, spec)?, lv, spec)?;
                        let rel = d_hilb(&s.phi, lv, &s.phi_dot, spec)?;
                        g.iter().zip(&rel).map(|(a, b)| a * b).sum()
                    }
                })
            }, limit)?
        }
        StudyKind::Gradient => {
            let phi = legendre(req(&inputs.u0));
            let limit = ctx.at(None, calabi_energy(&phi, spec))?;
            ctx.per_k(&kgrid, |k, lv| {
                let g = grad_z(&hilb_log(&phi, lv, spec)?, lv, spec)?;
                Ok((k as f64).powi(3) * g.iter().map(|v| v * v).sum::<f64>())
            }, limit)?
        }
        StudyKind::Angle => {
            let us = [req(&inputs.u0), req(&inputs.u1), req(&inputs.u2)];
            let corner = |d: &dyn Fn(usize, usize) -> crate::Result<f64>| -> crate::Result<f64> {
                angle_from_sides(d(1, 0)?, d(1, 2)?, d(0, 2)?)
            };
            let limit = ctx.at(None, corner(&|i, j| Ok(h_distance(us[i], us[j]))))?;
            ctx.per_k(&kgrid, |_, lv| {
                let ls = us.iter().map(|u| hilb_log_of(u, lv, spec)).collect::<crate::Result<Vec<_>>>()?;
                corner(&|i, j| log_diag_distance(&ls[i], &ls[j]))
            }, limit)?
        }
        StudyKind::Ineq1 | StudyKind::Ineq2 => {
            let pairs: Vec<(SymplecticPotential, SymplecticPotential)> = match inputs.samples {
                None => vec![(req(&inputs.u0).clone(), req(&inputs.u1).clone())],
                Some(n) => (0..n)
                    .map(|_| {
                        let v = draw_potentials(&mut rng, &inputs, 2);
                        (v[0].clone(), v[1].clone())
                    })
                    .collect(),
            };
            if inputs.samples.is_some() {
                inputs.drawn = pairs
                    .iter()
                    .map(|(a, b)| DrawnSample { k: None, potentials: vec![a.clone(), b.clone()], log_shift: None, perturbation: None, measured_eps: None })
                    .collect();
            }
            pairs
                .par_iter()
                .map(|(a, b)| {
                    let (value, limit) = ctx.at(None, (|| {
                        if kind == StudyKind::Ineq1 {
                            let (p0, p1) = (legendre(a), legendre(b));
                            let gain = k_energy(&p1, spec)? - k_energy(&p0, spec)?;
                            Ok((gain, h_distance(a, b) * calabi_energy(&p1, spec)?.sqrt()))
                        } else {
                            let (p0, v0) = h_geodesic(a, b, 0.0)?;
                            let (p1, v1) = h_geodesic(a, b, 1.0)?;
                            Ok((d_e(&p0, &v0, spec)?, d_e(&p1, &v1, spec)?))
                        }
                    })())?;
                    Ok(ReportRow::new(RowMode::Upper, 0, value, limit))
                })
                .collect::<Result<Vec<_>, StudyError>>()?
        }
        StudyKind::Tyz => {
            let phi = legendre(req(&inputs.u0));
            let grid: Vec<(f64, f64)> = (1..=TYZ_POINTS)
                .map(|i| {
                    let x = crate::numerics::logit(i as f64 / (TYZ_POINTS + 1) as f64);
                    (x, scalar_curvature(&phi, x))
                })
                .collect();
            ctx.per_k(&kgrid, |k, lv| {
                let rho = bergman_density(&phi, lv, spec)?;
                Ok(grid.iter().map(|&(x, s)| (rho.value(x) - k as f64 - 0.5 * s).abs()).fold(0.0, f64::max))
            }, 0.0)?
        }
        StudyKind::Iquant => {
            let phi = legendre(req(&inputs.u0));
            let limit = ctx.at(None, i_functional(&phi, spec))?;
            ctx.per_k(&kgrid, |k, lv| {
                let shift = i_k(&hilb_log(&phi, lv, spec)?) - i_k(&fubini_study_log_hilb(lv));
                Ok(-shift / (k as f64).powi(2))
            }, limit)?
        }
        StudyKind::Sandwich => {
            let us = draw_potentials(&mut rng, &inputs, inputs.samples.unwrap_or(20));
            inputs.drawn = us
                .iter()
                .map(|u| DrawnSample { k: None, potentials: vec![u.clone()], log_shift: None, perturbation: None, measured_eps: None })
                .collect();
            let jobs: Vec<(usize, &SymplecticPotential)> = us.iter().flat_map(|u| kgrid.iter().map(move |&k| (k, u))).collect();
            let pairs = jobs
                .par_iter()
                .map(|&(k, u)| {
                    let lv = ctx.level(k)?;
                    ctx.at(Some(k), (|| {
                        let phi = legendre(u);
                        let lh = hilb_log(&phi, lv, spec)?;
                        let z = z_func(&lh, lv, spec)?;
                        let low = l_func(&fs(&lh, lv)?, lv, spec)?;
                        let high = l_func(&phi, lv, spec)?;
                        Ok([ReportRow::new(RowMode::Upper, k, low, z), ReportRow::new(RowMode::Upper, k, z, high)])
                    })())
                })
                .collect::<Result<Vec<_>, StudyError>>()?;
            pairs.into_iter().flatten().collect()
        }
        StudyKind::Zconvex => {
            let n = inputs.samples.unwrap_or(50);
            let scale = inputs.scale.unwrap_or(0.5);
            for i in 0..n {
                let k = kgrid[i % kgrid.len()];
                let potentials = draw_potentials(&mut rng, &inputs, 2);
                let shift = (0..=k).map(|_| rng.gen_range(-scale..=scale)).collect();
                inputs.drawn.push(DrawnSample { k: Some(k), potentials, log_shift: Some(shift), perturbation: None, measured_eps: None });
            }
            let times = inputs.times.unwrap_or(17);
            inputs
                .drawn
                .par_iter()
                .map(|d| {
                    let k = d.k.unwrap_or(kgrid[0]);
                    let lv = ctx.level(k)?;
                    let min_dd = ctx.at(Some(k), (|| {
                        let l0 = hilb_log_of(&d.potentials[0], lv, spec)?;
                        let mut l1 = hilb_log_of(&d.potentials[1], lv, spec)?;
                        for (l, s) in l1.iter_mut().zip(d.log_shift.as_deref().unwrap_or(&[])) {
                            *l += s;
                        }
                        let zs = (0..times)
                            .map(|j| {
                                let t = j as f64 / (times - 1) as f64;
                                let lt: Vec<f64> = l0.iter().zip(&l1).map(|(a, b)| (1.0 - t) * a + t * b).collect();
                                z_func(&lt, lv, spec)
                            })
                            .collect::<crate::Result<Vec<_>>>()?;
                        Ok(zs.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::INFINITY, f64::min))
                    })())?;
                    Ok(ReportRow::new(RowMode::Lower, k, min_dd, 0.0))
                })
                .collect::<Result<Vec<_>, StudyError>>()?
        }
        StudyKind::Lemmas => lemmas(&ctx, &mut inputs, &mut rng)?,
    };
    Ok(ConvergenceReport::assemble(kind, inputs, rows))
}

fn lemmas(ctx: &Ctx, inputs: &mut StudyInputs, rng: &mut ChaCha8Rng) -> Result<Vec<ReportRow>, StudyError> {
    let spec = &ctx.spec;
    let kgrid = inputs.kgrid.clone();
    let wanted = inputs.samples.unwrap_or(500);
    let times = inputs.times.unwrap_or(33);
    let eps_max = inputs.eps.unwrap_or(0.002);
    let max_attempts = 10 * wanted;
    let mut rows = Vec::new();
    let mut attempts = 0;
    let mut rejected = 0;
    while inputs.drawn.len() < wanted {
        if attempts >= max_attempts {
            return Err(StudyError::Numeric {
                study: ctx.kind,
                k: None,
                source: crate::Error::contract(format!(
                    "only {} of {wanted} near-geodesics had measured eps ≤ {LEMMAS_MAX_EPS} after {attempts} draws",
                    inputs.drawn.len()
                )),
            });
        }
        let batch = (wanted - inputs.drawn.len()) + 8;
        let candidates: Vec<DrawnSample> = (0..batch)
            .map(|i| {
                let k = kgrid[(attempts + i) % kgrid.len()];
                let potentials = draw_potentials(rng, inputs, 2);
                let profile = if rng.gen_bool(0.5) { Profile::Constant } else { Profile::Logistic };
                let eps = rng.gen_range(0.0..=eps_max);
                DrawnSample { k: Some(k), potentials, log_shift: None, perturbation: Some((eps, profile)), measured_eps: None }
            })
            .collect();
        attempts += batch;
        let results = candidates
            .into_par_iter()
            .map(|mut d| {
                let k = d.k.unwrap_or(kgrid[0]);
                let lv = ctx.level(k)?;
                let (eps, profile) = d.perturbation.unwrap_or((0.0, Profile::Constant));
                let report = ctx.at(Some(k), (|| {
                    let path = PathInH::geodesic(&d.potentials[0], &d.potentials[1]).perturbed(eps, profile);
                    let forms = SampledPath::try_from_fn(times, |t| hilb(&path.at(t)?.phi, lv, spec))?;
                    near_geodesic_check(&forms)
                })())?;
                d.measured_eps = Some(report.eps);
                Ok((d, report))
            })
            .collect::<Result<Vec<_>, StudyError>>()?;
        for (d, r) in results {
            if inputs.drawn.len() == wanted {
                break;
            }
            if !(r.eps <= LEMMAS_MAX_EPS) {
                rejected += 1;
                continue;
            }
            let k = d.k.unwrap_or(0);
            let (g0, g1) = r.tangent_gaps;
            rows.push(ReportRow::new(RowMode::Upper, k, r.length - r.eps, r.dist));
            rows.push(ReportRow::new(RowMode::Upper, k, g0 * g0, g0 * g0 + r.tangent_slacks.0));
            rows.push(ReportRow::new(RowMode::Upper, k, g1 * g1, g1 * g1 + r.tangent_slacks.1));
            inputs.drawn.push(d);
        }
    }
    inputs.rejected = Some(rejected);
    Ok(rows)
}

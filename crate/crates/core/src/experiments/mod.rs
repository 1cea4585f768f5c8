//! Parameterized convergence studies and inequality checks with CSV/JSON reports.
//!
//! Every study compares a quantity computed at quantization level `k` with a
//! limit evaluated independently on the toric side. Inequality studies use the
//! same row layout with `limit` holding the bound and `abs_err` the signed slack.

mod config;
mod studies;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{load_config, run_config, write_report, ConfigError, RunConfig, RunOutcome, StudyConfig};
pub use studies::{resolve, run_study, DrawnSample, PathChoice, StudyInputs, K_RANGE, LEMMAS_MAX_EPS, LEMMAS_MAX_K, TYZ_POINTS};

use crate::error::Error;
use crate::numerics::ls_slope;

/// The available studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    /// `k^{-3/2} d(Hilb u0, Hilb u1)` against the toric distance.
    Distance,
    /// `k^{-3} |Ḣ|²` against `∫ φ̇² dμ`.
    Speed,
    /// `k^{-3} |∇_Ḣ Ḣ|²` against `∫ (φ̈ - |∇φ̇|²)² dμ`.
    Accel,
    /// `k³ |∇Z_k|²` against the Calabi energy.
    Gradient,
    /// `d/dt Z_k(Hilb φ_t)` against `d/dt E(φ_t)`.
    Dzdt,
    /// Comparison angle of a quantized triangle against the toric one.
    Angle,
    /// `E(φ1) - E(φ0) ≤ d(φ0, φ1) Ca(φ1)^{1/2}` on toric geodesics.
    Ineq1,
    /// `dE_{φ0}(φ̇(0)) ≤ dE_{φ1}(φ̇(1))` on toric geodesics.
    Ineq2,
    /// Remainder `sup |ρ_k - k - S/2|` of the density of states.
    Tyz,
    /// `L_k(FS_k Hilb_k φ) ≤ Z_k(Hilb_k φ) ≤ L_k(φ)`.
    Sandwich,
    /// `-k^{-2} (I_k(Hilb_k φ) - I_k(Hilb_k FS))` against `I(φ)`.
    Iquant,
    /// Second differences of `Z_k` along geodesics of diagonal forms.
    Zconvex,
    /// Length and endpoint-tangent bounds on quantized near-geodesics.
    Lemmas,
}

impl StudyKind {
    pub const ALL: [StudyKind; 13] = [
        StudyKind::Distance,
        StudyKind::Speed,
        StudyKind::Accel,
        StudyKind::Gradient,
        StudyKind::Dzdt,
        StudyKind::Angle,
        StudyKind::Ineq1,
        StudyKind::Ineq2,
        StudyKind::Tyz,
        StudyKind::Sandwich,
        StudyKind::Iquant,
        StudyKind::Zconvex,
        StudyKind::Lemmas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Distance => "distance",
            StudyKind::Speed => "speed",
            StudyKind::Accel => "accel",
            StudyKind::Gradient => "gradient",
            StudyKind::Dzdt => "dzdt",
            StudyKind::Angle => "angle",
            StudyKind::Ineq1 => "ineq1",
            StudyKind::Ineq2 => "ineq2",
            StudyKind::Tyz => "tyz",
            StudyKind::Sandwich => "sandwich",
            StudyKind::Iquant => "iquant",
            StudyKind::Zconvex => "zconvex",
            StudyKind::Lemmas => "lemmas",
        }
    }

    /// How rows of this study are judged.
    pub fn mode(self) -> RowMode {
        match self {
            StudyKind::Ineq1 | StudyKind::Ineq2 | StudyKind::Sandwich | StudyKind::Lemmas => RowMode::Upper,
            StudyKind::Zconvex => RowMode::Lower,
            _ => RowMode::Convergence,
        }
    }

    /// Whether the study draws random inputs and therefore needs a seed.
    pub fn is_random(self) -> bool {
        matches!(self, StudyKind::Ineq1 | StudyKind::Ineq2 | StudyKind::Sandwich | StudyKind::Zconvex | StudyKind::Lemmas)
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        StudyKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = StudyKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown study `{s}`, expected one of {}", names.join(", "))
        })
    }
}

/// Meaning of `value`, `limit` and the error columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowMode {
    /// `value → limit`; `abs_err = |value - limit|`, `rel_err = abs_err / |limit|`.
    Convergence,
    /// `value ≤ limit`; `abs_err = limit - value` is the slack.
    Upper,
    /// `value ≥ limit`; `abs_err = value - limit` is the slack.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: usize,
    pub value: f64,
    pub limit: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl ReportRow {
    pub fn new(mode: RowMode, k: usize, value: f64, limit: f64) -> Self {
        let abs_err = match mode {
            RowMode::Convergence => (value - limit).abs(),
            RowMode::Upper => limit - value,
            RowMode::Lower => value - limit,
        };
        let rel_err = if limit != 0.0 { abs_err / limit.abs() } else { abs_err };
        Self { k, value, limit, abs_err, rel_err }
    }
}

/// Limits at or below this size count as zero; such studies pass on absolute error.
pub const DEGENERATE_LIMIT: f64 = 1e-12;
/// Absolute error allowed when the limit vanishes.
pub const DEGENERATE_TOL: f64 = 1e-8;
/// Relative growth of `abs_err` tolerated between consecutive rows in the top half of the grid.
pub const TREND_NOISE: f64 = 0.1;
/// Largest fitted order accepted for a convergence study.
pub const MAX_FITTED_ORDER: f64 = -0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub study: StudyKind,
    pub mode: RowMode,
    pub inputs: StudyInputs,
    pub rows: Vec<ReportRow>,
    /// Least-squares slope of `log abs_err` against `log k`.
    pub fitted_order: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    /// Human-readable reasons for a failed check.
    pub failures: Vec<String>,
}

fn fitted_order(rows: &[ReportRow]) -> Option<f64> {
    if rows.len() < 4 || rows.iter().any(|r| !(r.abs_err > 0.0) || r.k == 0) {
        return None;
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.k as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.abs_err.ln()).collect();
    Some(ls_slope(&xs, &ys))
}

impl ConvergenceReport {
    /// Sorts the rows, fits the order and judges the study.
    pub fn assemble(study: StudyKind, inputs: StudyInputs, mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by_key(|r| r.k);
        let mode = study.mode();
        let tolerance = inputs.tol;
        let fitted = if mode == RowMode::Convergence { fitted_order(&rows) } else { None };
        let mut failures = Vec::new();
        if rows.is_empty() {
            failures.push("no rows".to_string());
        }
        // a vanishing limit is judged on absolute error; the density remainder always has limit 0
        let degenerate = rows.iter().all(|r| r.limit.abs() <= DEGENERATE_LIMIT)
            && (study != StudyKind::Tyz || rows.iter().all(|r| r.abs_err <= DEGENERATE_TOL));
        match mode {
            RowMode::Upper | RowMode::Lower => {
                for r in rows.iter().filter(|r| !(r.abs_err >= -tolerance)) {
                    failures.push(format!("k = {}: slack {:e} below -{tolerance:e}", r.k, r.abs_err));
                }
            }
            RowMode::Convergence if degenerate => {
                for r in rows.iter().filter(|r| !(r.abs_err <= DEGENERATE_TOL)) {
                    failures.push(format!("k = {}: |value| {:e} with vanishing limit", r.k, r.abs_err));
                }
            }
            RowMode::Convergence => {
                if study == StudyKind::Tyz {
                    match fitted {
                        Some(o) if (o + 1.0).abs() <= tolerance => {}
                        other => failures.push(format!("fitted order {other:?} outside -1 ± {tolerance}")),
                    }
                } else {
                    if let Some(last) = rows.last() {
                        if !(last.rel_err <= tolerance) {
                            failures.push(format!("k = {}: rel_err {:e} above {tolerance:e}", last.k, last.rel_err));
                        }
                    }
                    if let Some(o) = fitted {
                        if !(o <= MAX_FITTED_ORDER) {
                            failures.push(format!("fitted order {o:.3} above {MAX_FITTED_ORDER}"));
                        }
                    }
                }
                let top = &rows[rows.len() / 2..];
                for w in top.windows(2) {
                    if w[1].abs_err > (1.0 + TREND_NOISE) * w[0].abs_err {
                        failures.push(format!("abs_err grows from k = {} to k = {}", w[0].k, w[1].k));
                    }
                }
            }
        }
        let pass = failures.is_empty();
        Self { study, mode, inputs, rows, fitted_order: fitted, tolerance, pass, failures }
    }

    /// `k,value,limit,abs_err,rel_err` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,value,limit,abs_err,rel_err\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.16e},{:.16e},{:.16e},{:.16e}\n", r.k, r.value, r.limit, r.abs_err, r.rel_err));
        }
        out
    }
}

/// A study that could not be completed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StudyError {
    #[error("invalid input for study {study}: {message}")]
    Invalid { study: StudyKind, message: String },
    #[error("study {study} failed{at}: {source}", at = match .k { Some(k) => format!(" at k = {k}"), None => String::new() })]
    Numeric { study: StudyKind, k: Option<usize>, source: Error },
}

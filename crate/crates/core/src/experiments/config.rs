use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::studies::PathChoice;
use super::{resolve, run_study, ConvergenceReport, StudyError, StudyKind};
use crate::toric::SymplecticPotential;

/// One entry of the `studies` list; omitted fields take the study's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub kind: StudyKind,
    #[serde(default)]
    pub u0: Option<SymplecticPotential>,
    #[serde(default)]
    pub u1: Option<SymplecticPotential>,
    #[serde(default)]
    pub u2: Option<SymplecticPotential>,
    #[serde(default)]
    pub kgrid: Option<Vec<usize>>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub path: Option<PathChoice>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub times: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl StudyConfig {
    pub fn new(kind: StudyKind) -> Self {
        Self {
            kind,
            u0: None,
            u1: None,
            u2: None,
            kgrid: None,
            tol: None,
            path: None,
            t: None,
            times: None,
            samples: None,
            degree: None,
            scale: None,
            eps: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub studies: Vec<StudyConfig>,
    pub out_dir: PathBuf,
    /// Seed shared by randomized studies that do not set their own.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error("cannot write report {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl ConfigError {
    /// Process exit status: 2 for invalid input, 1 for numeric or output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Parse { .. } | ConfigError::Read { .. } | ConfigError::Study(StudyError::Invalid { .. }) => 2,
            _ => 1,
        }
    }
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: name.clone(), source })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        path: name,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<ConvergenceReport>,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_report(report: &ConvergenceReport, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, ConfigError> {
    let write = |path: PathBuf, body: String| -> Result<PathBuf, ConfigError> {
        fs::write(&path, body).map_err(|source| ConfigError::Write { path: path.display().to_string(), source })?;
        Ok(path)
    };
    fs::create_dir_all(dir).map_err(|source| ConfigError::Write { path: dir.display().to_string(), source })?;
    let json = serde_json::to_string_pretty(report).expect("reports serialize");
    Ok(vec![write(dir.join(format!("{stem}.csv")), report.to_csv())?, write(dir.join(format!("{stem}.json")), json + "\n")?])
}

/// Validates every study, runs them concurrently and writes one CSV and one JSON file per study.
pub fn run_config(cfg: &RunConfig) -> Result<RunOutcome, ConfigError> {
    let resolved = cfg
        .studies
        .iter()
        .map(|s| resolve(s, cfg.seed))
        .collect::<Result<Vec<_>, StudyError>>()?;
    let reports = cfg
        .studies
        .par_iter()
        .zip(resolved)
        .map(|(s, inputs)| run_study(s.kind, inputs))
        .collect::<Result<Vec<_>, StudyError>>()?;
    let mut files = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        files.extend(write_report(r, &cfg.out_dir, &format!("{:02}_{}", i + 1, r.study))?);
    }
    Ok(RunOutcome { reports, files })
}

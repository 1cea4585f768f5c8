use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kahler_quant::experiments::{load_config, resolve, run_config, run_study, write_report, ConvergenceReport, StudyConfig, StudyKind};
use kahler_quant::numerics::{logit, QuadratureSpec};
use kahler_quant::quantize::{bergman_density, hilb_log_of, QuantLevel};
use kahler_quant::symspace::log_diag_distance;
use kahler_quant::toric::{h_distance, legendre, scalar_curvature, PotentialSpec, SymplecticPotential};

#[derive(Parser)]
#[command(name = "kq", version, about = "Quantization of S¹-invariant Kähler potentials on CP¹")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every study listed in a JSON config.
    Run { config: PathBuf },
    /// Run a single study and print its rows as CSV.
    Study {
        kind: StudyKind,
        /// Comma-separated quantization levels.
        #[arg(long = "k", value_delimiter = ',')]
        kgrid: Option<Vec<usize>>,
        #[arg(long, value_parser = parse_potential)]
        u0: Option<SymplecticPotential>,
        #[arg(long, value_parser = parse_potential)]
        u1: Option<SymplecticPotential>,
        #[arg(long, value_parser = parse_potential)]
        u2: Option<SymplecticPotential>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        samples: Option<usize>,
        /// Also write CSV and JSON reports here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the density of states next to `k + S/2`.
    Density {
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = parse_potential)]
        u: SymplecticPotential,
        #[arg(long, default_value_t = 17)]
        points: usize,
    },
    /// Toric distance between two potentials, optionally with its quantized approximations.
    Dist {
        #[arg(long, value_parser = parse_potential)]
        u0: SymplecticPotential,
        #[arg(long, value_parser = parse_potential)]
        u1: SymplecticPotential,
        #[arg(long = "k", value_delimiter = ',')]
        kgrid: Vec<usize>,
    },
}

/// `{"coeffs": [...], "constant": c}` or a comma-separated list `c_1,c_2,...`.
fn parse_potential(s: &str) -> Result<SymplecticPotential, String> {
    let spec: PotentialSpec = if s.trim_start().starts_with('{') {
        serde_json::from_str(s).map_err(|e| e.to_string())?
    } else {
        let coeffs = s
            .split(',')
            .filter(|c| !c.trim().is_empty())
            .map(|c| c.trim().parse::<f64>().map_err(|e| format!("`{c}`: {e}")))
            .collect::<Result<_, _>>()?;
        PotentialSpec { coeffs, constant: 0.0 }
    };
    SymplecticPotential::try_from(spec).map_err(|e| e.to_string())
}

fn summary(r: &ConvergenceReport) -> String {
    let status = if r.pass { "PASS" } else { "FAIL" };
    let order = r.fitted_order.map(|o| format!(", fitted order {o:.3}")).unwrap_or_default();
    let mut line = format!("{status} {} ({} rows{order})", r.study, r.rows.len());
    for f in &r.failures {
        line.push_str(&format!("\n    {f}"));
    }
    line
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let outcome = load_config(&config).and_then(|cfg| run_config(&cfg));
            match outcome {
                Ok(out) => {
                    for r in &out.reports {
                        println!("{}", summary(r));
                    }
                    for f in &out.files {
                        eprintln!("wrote {}", f.display());
                    }
                    ExitCode::from(if out.all_pass() { 0 } else { 1 })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Study { kind, kgrid, u0, u1, u2, tol, seed, samples, out } => {
            let mut cfg = StudyConfig::new(kind);
            (cfg.kgrid, cfg.u0, cfg.u1, cfg.u2, cfg.tol, cfg.samples) = (kgrid, u0, u1, u2, tol, samples);
            cfg.seed = Some(seed);
            let inputs = match resolve(&cfg, None) {
                Ok(i) => i,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = match run_study(kind, inputs) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            print!("{}", report.to_csv());
            eprintln!("{}", summary(&report));
            if let Some(dir) = out {
                if let Err(e) = write_report(&report, &dir, kind.name()) {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            ExitCode::from(if report.pass { 0 } else { 1 })
        }
        Command::Density { k, u, points } => {
            let spec = QuadratureSpec::default();
            let phi = legendre(&u);
            let rho = QuantLevel::new(k).and_then(|lv| bergman_density(&phi, lv, &spec));
            match rho {
                Ok(rho) => {
                    println!("x,rho,k_plus_half_s");
                    for i in 1..=points {
                        let x = logit(i as f64 / (points + 1) as f64);
                        let expected = k as f64 + 0.5 * scalar_curvature(&phi, x);
                        println!("{x:.16e},{:.16e},{expected:.16e}", rho.value(x));
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error at k = {k}: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Dist { u0, u1, kgrid } => {
            let spec = QuadratureSpec::default();
            println!("k,distance");
            println!("inf,{:.16e}", h_distance(&u0, &u1));
            for k in kgrid {
                let d = QuantLevel::new(k).and_then(|lv| {
                    log_diag_distance(&hilb_log_of(&u0, lv, &spec)?, &hilb_log_of(&u1, lv, &spec)?)
                });
                match d {
                    Ok(d) => println!("{k},{:.16e}", d * (k as f64).powf(-1.5)),
                    Err(e) => {
                        eprintln!("error at k = {k}: {e}");
                        return ExitCode::from(1);
                    }
                }
            }
            ExitCode::SUCCESS
        }
    }
}

//! Command-line front end: eigenstructure reports, forward-sector Riemann
//! solves, explicit fan composition, and profile verification.
//!
//! Exit codes: 0 all checks pass, 1 verification failure, 2 solver failure,
//! 3 malformed input or configuration.

mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;

use wavefan::pencil::{self, Analysis, FieldKind};
use wavefan::profile::Profile;
use wavefan::riemann::{self, WaveFan, WaveSpec};
use wavefan::structure::{self, StructureReport};
use wavefan::systems::{State, System};
use wavefan::waves::{Side, WaveKind};
use wavefan::{averaging, linalg, Error, Result};

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "wavefan",
    version,
    about = "Steady self-similar wave fans: eigenstructure, Riemann solves, and profile verification"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the pencil eigenstructure, field classification, and convexity
    /// sign of the configured system.
    Eigs(Overrides),
    /// Solve the forward-sector Riemann problem and verify the profile.
    Solve(Overrides),
    /// Compose an explicit wave list and verify the profile.
    Compose(Overrides),
    /// Verify an externally supplied profile CSV.
    Verify {
        /// Path to the profile CSV.
        profile: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Summarize a previously written report JSON; exit code reflects its
    /// pass flag.
    Report {
        /// Path to the report JSON.
        report: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Malformed(_) | Error::Config(_) => 3,
                _ => 2,
            }
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Eigs(o) => cmd_eigs(&RunConfig::load(&o)?),
        Cmd::Solve(o) => cmd_solve(&RunConfig::load(&o)?),
        Cmd::Compose(o) => cmd_compose(&RunConfig::load(&o)?),
        Cmd::Verify { profile, overrides } => cmd_verify(&RunConfig::load(&overrides)?, &profile),
        Cmd::Report { report } => cmd_report(&report),
    }
}

#[derive(Serialize)]
struct EigsOutput {
    lambdas: Vec<f64>,
    multiplicities: Vec<usize>,
    kinds: Vec<FieldKind>,
    horizontal_spectrum: Vec<f64>,
    convexity_sign: f64,
    rotation_angle: f64,
}

fn cmd_eigs(cfg: &RunConfig) -> Result<i32> {
    let system = cfg.build_system()?;
    let analysis = Analysis::new(system.as_ref())?;
    let jx = system.jac_x(&system.background())?;
    let out = EigsOutput {
        lambdas: (0..analysis.n_families())
            .map(|f| analysis.background_lambda(f))
            .collect(),
        multiplicities: analysis.mults.clone(),
        kinds: analysis.kinds.clone(),
        horizontal_spectrum: linalg::real_eigenvalues_sorted(&jx, 1e-9)?,
        convexity_sign: averaging::e_convexity(system.as_ref())?,
        rotation_angle: pencil::char_poly_root_check(system.as_ref())?,
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("serialize"));
    Ok(0)
}

fn left_state(cfg: &RunConfig, system: &dyn System) -> Result<State> {
    match &cfg.left_state {
        None => Ok(system.background()),
        Some(u) => {
            if u.len() != system.dim() {
                return Err(Error::Config(format!(
                    "left_state has {} components, system has {}",
                    u.len(),
                    system.dim()
                )));
            }
            let state = State::from_slice(u);
            system.validate(&state)?;
            Ok(state)
        }
    }
}

fn cmd_solve(cfg: &RunConfig) -> Result<i32> {
    let start = Instant::now();
    let system = cfg.build_system()?;
    let analysis = Analysis::new(system.as_ref())?;
    let ul = left_state(cfg, system.as_ref())?;
    let ur = match (&cfg.right_state, &cfg.right_strengths) {
        (Some(u), _) => {
            let state = State::from_slice(u);
            system.validate(&state)?;
            state
        }
        (None, Some(sigma)) => {
            if sigma.len() != system.dim() {
                return Err(Error::Config(format!(
                    "right_strengths has {} entries, expected {}",
                    sigma.len(),
                    system.dim()
                )));
            }
            riemann::apply_strengths(&analysis, &ul, &DVector::from_column_slice(sigma))?
        }
        (None, None) => ul.clone(),
    };

    let fan = match riemann::solve_forward(&analysis, &ul, &ur) {
        Ok(fan) => fan,
        Err(e) => {
            write_diagnostic(cfg, &e)?;
            eprintln!("solver failure: {e}");
            return Ok(2);
        }
    };
    emit(cfg, &analysis, &fan, Side::Forward, start)
}

fn parse_waves(spec: &str) -> Result<Vec<WaveSpec>> {
    let mut out = Vec::new();
    for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
        let fields: Vec<&str> = part.trim().split(':').collect();
        if fields.len() != 3 {
            return Err(Error::Config(format!(
                "wave entry '{part}' is not kind:family:strengths"
            )));
        }
        let kind = match fields[0] {
            "shock" => WaveKind::Shock,
            "simple" => WaveKind::Simple,
            "contact" => WaveKind::Contact,
            other => return Err(Error::Config(format!("unknown wave kind '{other}'"))),
        };
        let family: usize = fields[1]
            .parse()
            .map_err(|_| Error::Config(format!("bad family '{}'", fields[1])))?;
        out.push(WaveSpec {
            family,
            kind,
            strength: config::parse_vector(fields[2])?,
        });
    }
    Ok(out)
}

fn cmd_compose(cfg: &RunConfig) -> Result<i32> {
    let start = Instant::now();
    let system = cfg.build_system()?;
    let analysis = Analysis::new(system.as_ref())?;
    let ul = left_state(cfg, system.as_ref())?;
    let spec = parse_waves(cfg.waves.as_deref().unwrap_or(""))?;
    let fan = match riemann::compose_fan(&analysis, &ul, &spec, cfg.side) {
        Ok(fan) => fan,
        Err(e @ (Error::Composition(_) | Error::Structure(_) | Error::Config(_))) => {
            return Err(e);
        }
        Err(e) => {
            write_diagnostic(cfg, &e)?;
            eprintln!("solver failure: {e}");
            return Ok(2);
        }
    };
    emit(cfg, &analysis, &fan, cfg.side, start)
}

fn cmd_verify(cfg: &RunConfig, path: &Path) -> Result<i32> {
    let start = Instant::now();
    let system = cfg.build_system()?;
    let analysis = Analysis::new(system.as_ref())?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Malformed(format!("cannot read {}: {e}", path.display())))?;
    let profile = Profile::from_csv(&text)?;
    if profile.dim != system.dim() {
        return Err(Error::Malformed(format!(
            "profile has {} components, system has {}",
            profile.dim,
            system.dim()
        )));
    }
    let report = structure::verify_profile(&analysis, &profile, cfg.side, &cfg.verify)?;
    let path = write_report(cfg, &report, start)?;
    print_summary(&report, None, &path);
    Ok(if report.flags.pass { 0 } else { 1 })
}

fn cmd_report(path: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Malformed(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("bad JSON: {e}")))?;
    let flags = value
        .get("report")
        .and_then(|r| r.get("flags"))
        .ok_or_else(|| Error::Malformed("report JSON lacks report.flags".into()))?;
    for key in ["constancy", "weak_form", "entropy", "sector_rules", "pass"] {
        let v = flags
            .get(key)
            .and_then(|b| b.as_bool())
            .ok_or_else(|| Error::Malformed(format!("report flag '{key}' missing")))?;
        println!("{key}: {}", if v { "pass" } else { "FAIL" });
    }
    let pass = flags.get("pass").and_then(|b| b.as_bool()).unwrap_or(false);
    Ok(if pass { 0 } else { 1 })
}

/// Sample, verify, and write the profile and report for a fan.
fn emit(
    cfg: &RunConfig,
    analysis: &Analysis,
    fan: &WaveFan,
    side: Side,
    start: Instant,
) -> Result<i32> {
    let sectors = structure::sector_map(analysis, side)?;
    let grid = structure::build_grid(&sectors, cfg.points_per_sector, cfg.margin);
    let profile = Profile::from_fan(analysis, fan, &grid)?;
    let report = structure::verify_profile(analysis, &profile, side, &cfg.verify)?;

    std::fs::create_dir_all(&cfg.output)
        .map_err(|e| Error::Config(format!("cannot create output directory: {e}")))?;
    let csv_path = cfg.output.join("profile.csv");
    std::fs::write(&csv_path, profile.to_csv())
        .map_err(|e| Error::Config(format!("cannot write profile: {e}")))?;
    let report_path = write_report(cfg, &report, start)?;
    print_summary(&report, Some(&csv_path), &report_path);
    Ok(if report.flags.pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct Timing {
    wall_ms: u128,
    unix_s: u64,
}

#[derive(Serialize)]
struct Provenance<'a> {
    version: &'static str,
    config: &'a RunConfig,
    timing: Timing,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    provenance: Provenance<'a>,
    report: &'a StructureReport,
}

fn write_report(cfg: &RunConfig, report: &StructureReport, start: Instant) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.output)
        .map_err(|e| Error::Config(format!("cannot create output directory: {e}")))?;
    let payload = ReportJson {
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            timing: Timing {
                wall_ms: start.elapsed().as_millis(),
                unix_s: std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            },
        },
        report,
    };
    let path = cfg.output.join("report.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&payload).expect("serialize report"),
    )
    .map_err(|e| Error::Config(format!("cannot write report: {e}")))?;
    Ok(path)
}

fn write_diagnostic(cfg: &RunConfig, err: &Error) -> Result<()> {
    std::fs::create_dir_all(&cfg.output)
        .map_err(|e| Error::Config(format!("cannot create output directory: {e}")))?;
    let diag = serde_json::json!({ "error": err.to_string() });
    std::fs::write(
        cfg.output.join("diagnostic.json"),
        serde_json::to_string_pretty(&diag).expect("serialize"),
    )
    .map_err(|e| Error::Config(format!("cannot write diagnostic: {e}")))?;
    Ok(())
}

fn print_summary(report: &StructureReport, csv: Option<&Path>, report_path: &Path) {
    if let Some(csv) = csv {
        println!("profile: {}", csv.display());
    }
    println!("report: {}", report_path.display());
    println!(
        "waves: {}",
        report
            .waves
            .iter()
            .map(|w| format!(
                "{:?}(family {})",
                w.kind,
                w.family
                    .map(|f| f.to_string())
                    .unwrap_or_else(|| "?".into())
            ))
            .collect::<Vec<_>>()
            .join(", ")
    );
    for (name, value) in [
        ("constancy", report.flags.constancy),
        ("weak_form", report.flags.weak_form),
        ("entropy", report.flags.entropy),
        ("sector_rules", report.flags.sector_rules),
        ("pass", report.flags.pass),
    ] {
        println!("{name}: {}", if value { "pass" } else { "FAIL" });
    }
}

//! Command-line front end: analyzes declared Lagrangian systems, derives
//! their constraint structure, checks candidate symmetry generators, and
//! writes matching JSON and text reports.
//!
//! Exit codes: 0 when every requested verdict is PASS, 1 when any check
//! fails or is only partially satisfied, 2 on input or derivation errors.

mod declaration;
mod error;
mod report;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use noether_core::parse::parse_expr;
use noether_core::{Analysis, Options};

use crate::error::CliError;
use crate::selftest::SelfTestConfig;

#[derive(Parser)]
#[command(
    name = "noether-kit",
    version,
    about = "Constraint analysis and canonical Noether symmetry checks for first-order Lagrangians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a declared system and report on its symmetry generators
    Analyze {
        /// TOML system declaration
        file: PathBuf,
        /// Extra generator candidate, a phase-space expression (repeatable)
        #[arg(long = "generator", value_name = "EXPR")]
        generators: Vec<String>,
        /// Extra gauge seed handed to the gauge-generator solver (repeatable)
        #[arg(long = "solve-gauge", value_name = "SEED")]
        solve_gauge: Vec<String>,
        /// Directory the JSON and text reports are written into
        #[arg(long = "report-dir", value_name = "DIR", default_value = ".")]
        report_dir: PathBuf,
        /// Seed for the deterministic numeric probes
        #[arg(long = "probe-seed", value_name = "N")]
        probe_seed: Option<u64>,
        /// Number of numeric probe points per zero test
        #[arg(long = "probe-points", value_name = "N")]
        probe_points: Option<u32>,
        /// Bound on the constraint stabilization depth
        #[arg(long = "max-depth", value_name = "N")]
        max_depth: Option<u32>,
        /// Degree bound for constraint-combination ansatz searches
        #[arg(long = "ansatz-degree", value_name = "N")]
        ansatz_degree: Option<u32>,
    },
    /// Run the bundled fixtures and identity suites against frozen expectations
    SelfTest {
        /// Seed for the deterministic numeric probes
        #[arg(long = "probe-seed", value_name = "N")]
        probe_seed: Option<u64>,
        /// Number of random probes per identity suite
        #[arg(long = "probe-points", value_name = "N")]
        probe_points: Option<u32>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Analyze {
            file,
            generators,
            solve_gauge,
            report_dir,
            probe_seed,
            probe_points,
            max_depth,
            ansatz_degree,
        } => {
            let flags = Flags {
                probe_seed,
                probe_points,
                max_depth,
                ansatz_degree,
            };
            match run_analyze(&file, &generators, &solve_gauge, &report_dir, flags) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(1),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::SelfTest {
            probe_seed,
            probe_points,
        } => ExitCode::from(selftest::run(SelfTestConfig {
            probe_seed,
            probe_points,
        }) as u8),
    }
}

#[derive(Clone, Copy)]
struct Flags {
    probe_seed: Option<u64>,
    probe_points: Option<u32>,
    max_depth: Option<u32>,
    ansatz_degree: Option<u32>,
}

/// Defaults, overridden by the declaration's options table, overridden by
/// command-line flags.
fn merge_options(declared: &declaration::DeclaredOptions, flags: Flags) -> Options {
    let mut options = Options::default();
    if let Some(v) = declared.max_stabilization_depth {
        options.max_stabilization_depth = v;
    }
    if let Some(v) = declared.ansatz_degree {
        options.ansatz_degree = v;
    }
    if let Some(v) = declared.probe_seed {
        options.probe_seed = v;
    }
    if let Some(v) = declared.probe_points {
        options.probe_points = v;
    }
    if let Some(v) = flags.max_depth {
        options.max_stabilization_depth = v;
    }
    if let Some(v) = flags.ansatz_degree {
        options.ansatz_degree = v;
    }
    if let Some(v) = flags.probe_seed {
        options.probe_seed = v;
    }
    if let Some(v) = flags.probe_points {
        options.probe_points = v;
    }
    options
}

fn run_analyze(
    file: &Path,
    generators: &[String],
    solve_gauge: &[String],
    report_dir: &Path,
    flags: Flags,
) -> Result<bool, CliError> {
    let loaded = declaration::load(file)?;
    let options = merge_options(&loaded.declaration.options, flags);
    let analysis = Analysis::build(&loaded.model, &loaded.map, options)?;

    let table = loaded.model.table();
    let mut requests = report::declared_requests(&loaded)?;
    for (i, src) in generators.iter().enumerate() {
        let expr = parse_expr(src, table)?;
        requests.generators.push((format!("cli-{}", i + 1), expr));
    }
    for (i, src) in solve_gauge.iter().enumerate() {
        let expr = parse_expr(src, table)?;
        requests
            .gauge_seeds
            .push((format!("cli-seed-{}", i + 1), expr));
    }

    let built = report::build_report(&loaded, &analysis, &requests)?;
    print!("{}", report::render_text(&built.report));
    let (json_path, text_path) = report::write_reports(report_dir, &built.report)?;
    println!("reports: {} {}", json_path.display(), text_path.display());
    Ok(built.all_pass())
}

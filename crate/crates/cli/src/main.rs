//! `poisson-reduce`: batch simulations of the rigid body and its reduction
//! to the Poisson sphere, the verification battery and trajectory plots.

mod config;
mod error;
mod output;
mod plot;
mod run;
mod verify;

use clap::{Parser, Subcommand};
use config::RunConfig;
use error::{CliError, CliResult};
use output::Staged;
use rayon::prelude::*;
use run::Kind;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use verify::{run_battery, Setting, DEFAULT_SEED};

const LOG_ENV: &str = "POISSON_REDUCE_LOG";

#[derive(Parser)]
#[command(name = "poisson-reduce", version, about)]
struct Cli {
    /// Worker threads for independent runs and checks (0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Seed for the random samples of `verify`.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Only report errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Scales the reduced gyroscopic density in the projection check.
    #[arg(long, global = true, hide = true, default_value_t = 1.0)]
    fault_kappa_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the body on SO(3) from full initial data.
    SimulateFull {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Integrate the reduced system on the Poisson sphere.
    SimulateReduced {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Run the property battery and print the result table as JSON.
    Verify { config: Option<PathBuf> },
    /// Render a trajectory CSV to SVG.
    Plot { csv: PathBuf, svg: PathBuf },
}

fn init_logging(quiet: bool) {
    let mut b = env_logger::Builder::new();
    b.filter_level(log::LevelFilter::Warn);
    if let Ok(spec) = std::env::var(LOG_ENV) {
        b.parse_filters(&spec);
    }
    if quiet {
        b.filter_level(log::LevelFilter::Error);
    }
    b.format_timestamp(None).init();
}

/// Concurrent runs must not share output files.
fn check_disjoint(configs: &[PathBuf]) -> CliResult<()> {
    let mut owner: HashMap<PathBuf, &Path> = HashMap::new();
    for path in configs {
        let Ok(cfg) = RunConfig::load(path) else { continue };
        for out in run::output_paths(path, &cfg) {
            if let Some(prev) = owner.insert(out.clone(), path) {
                return Err(CliError::config(
                    path,
                    format!("output {} is also written by {}", out.display(), prev.display()),
                ));
            }
        }
    }
    Ok(())
}

fn simulate(configs: &[PathBuf], kind: Kind, quiet: bool) -> i32 {
    if let Err(e) = check_disjoint(configs) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let results: Vec<_> = configs.par_iter().map(|p| (p, run::run_config(p, kind))).collect();
    let mut code = 0;
    for (path, r) in results {
        match r {
            Ok(report) => {
                let cfg_has_outputs = RunConfig::load(path).map(|c| !c.outputs.is_empty()).unwrap_or(true);
                if !cfg_has_outputs {
                    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                }
                if !quiet {
                    eprintln!(
                        "ok {}: {} samples, max dE/E0 {:.3e}, {} chart switches",
                        path.display(),
                        report.samples,
                        report.max_rel_energy_drift,
                        report.chart_switches
                    );
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                code = code.max(e.exit_code());
            }
        }
    }
    code
}

fn verify(config: Option<&Path>, seed: u64, fault: f64) -> CliResult<()> {
    let mut setting = match config {
        Some(p) => {
            let cfg = RunConfig::load(p)?;
            Setting::from_config(&cfg, seed).map_err(|e| CliError::config(p, e))?
        }
        None => Setting::defaults(seed),
    };
    setting.kappa_scale = fault;
    let report = run_battery(&setting);
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Verify(report.failing.iter().map(|s| s.to_string()).collect()))
    }
}

fn plot(csv: &Path, svg: &Path) -> CliResult<()> {
    let bytes = std::fs::read(csv).map_err(|e| CliError::io(csv, e))?;
    let text = plot::render(csv, &bytes)?;
    let mut staged = Staged::default();
    staged.add(svg, text.as_bytes())?;
    staged.commit()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors share the config exit code
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging(cli.quiet);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    };
    let code = pool.install(|| match &cli.command {
        Command::SimulateFull { configs } => simulate(configs, Kind::Full, cli.quiet),
        Command::SimulateReduced { configs } => simulate(configs, Kind::Reduced, cli.quiet),
        Command::Verify { config } => match verify(config.as_deref(), cli.seed, cli.fault_kappa_scale) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Plot { csv, svg } => match plot(csv, svg) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    });
    ExitCode::from(code as u8)
}

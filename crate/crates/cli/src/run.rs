//! `simulate-full` and `simulate-reduced`.

use crate::config::{resolve, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{full_csv, full_report, reduced_csv, reduced_report, DriftReport, Staged};
use crate::plot;
use log::{debug, info};
use poisson_reduce_core::{simulate_body, BodyInitial, ReducedSimulation};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Full,
    Reduced,
}

pub struct RunOutput {
    pub report: DriftReport,
    pub csv: Vec<u8>,
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Output files named by a config, resolved against its directory.
pub fn output_paths(path: &Path, cfg: &RunConfig) -> Vec<PathBuf> {
    let base = base_dir(path);
    cfg.outputs
        .iter()
        .flat_map(|o| [&o.trajectory_csv, &o.report_json, &o.plot_svg])
        .flatten()
        .map(|p| resolve(&base, p))
        .collect()
}

pub fn simulate(path: &Path, cfg: &RunConfig, kind: Kind) -> CliResult<RunOutput> {
    let ctx = path.display().to_string();
    let rt = |e| CliError::runtime(&ctx, e);
    let inertia = cfg.inertia().map_err(|e| CliError::config(path, e))?;
    let settings = cfg.settings().map_err(|e| CliError::config(path, e))?;
    let start = Instant::now();
    match kind {
        Kind::Full => {
            let initial = match cfg.full_initial() {
                Some(r) => r.map_err(|e| CliError::config(path, e))?,
                None => return Err(CliError::config(path, "simulate-full needs `initial.type = \"full\"`")),
            };
            let potential = cfg.potential().map_err(|e| CliError::config(path, e))?;
            let traj = simulate_body(&BodyInitial::Full(initial), &inertia, &potential, &settings).map_err(rt)?;
            let report = full_report(&traj, start.elapsed().as_secs_f64());
            Ok(RunOutput { report, csv: full_csv(&traj) })
        }
        Kind::Reduced => {
            let (state, k) = match cfg.reduced_initial() {
                Some(r) => r.map_err(|e| CliError::config(path, e))?,
                None => return Err(CliError::config(path, "simulate-reduced needs `initial.type = \"reduced\"`")),
            };
            let spec = cfg.reduced_spec(k).map_err(|e| CliError::config(path, e))?;
            let traj = ReducedSimulation::new(spec)
                .with_curvature(cfg.record_curvature)
                .run(&state, &settings)
                .map_err(rt)?;
            let report = reduced_report(&traj, start.elapsed().as_secs_f64());
            Ok(RunOutput { report, csv: reduced_csv(&traj) })
        }
    }
}

/// Runs one config and writes every requested output, all or nothing.
pub fn run_config(path: &Path, kind: Kind) -> CliResult<DriftReport> {
    let cfg = RunConfig::load(path)?;
    debug!("{}: canonical config\n{}", path.display(), cfg.to_json());
    let out = simulate(path, &cfg, kind)?;
    let base = base_dir(path);
    let mut staged = Staged::default();
    let mut svg = None;
    for o in &cfg.outputs {
        if let Some(p) = &o.trajectory_csv {
            staged.add(&resolve(&base, p), &out.csv)?;
        }
        if let Some(p) = &o.report_json {
            let mut json = serde_json::to_string_pretty(&out.report).expect("report serializes");
            json.push('\n');
            staged.add(&resolve(&base, p), json.as_bytes())?;
        }
        if let Some(p) = &o.plot_svg {
            if svg.is_none() {
                svg = Some(plot::render(path, &out.csv)?);
            }
            staged.add(&resolve(&base, p), svg.as_deref().unwrap_or_default().as_bytes())?;
        }
    }
    staged.commit()?;
    info!(
        "{}: {} samples, max dE/E0 {:.3e}, {:.3}s",
        path.display(),
        out.report.samples,
        out.report.max_rel_energy_drift,
        out.report.wall_time_s
    );
    Ok(out.report)
}

//! Trajectory tables, drift reports and atomic file output.

use crate::error::{CliError, CliResult};
use poisson_reduce_core::{BodySample, ReducedTrajectory, Trajectory};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use tempfile::NamedTempFile;

pub const FULL_COLUMNS: [&str; 11] = ["t", "a1", "a2", "a3", "w1", "w2", "w3", "E", "J", "unit_res", "ortho_res"];
pub const REDUCED_COLUMNS: [&str; 7] = ["t", "a1", "a2", "a3", "Ered", "chart_id", "kg"];

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// "full" or "reduced".
    pub kind: String,
    pub samples: usize,
    pub max_rel_energy_drift: f64,
    pub mean_rel_energy_drift: f64,
    /// Full runs only; the reduced system has the momentum fixed.
    pub max_momentum_drift: Option<f64>,
    pub max_unit_residual: f64,
    /// Full runs only.
    pub max_ortho_residual: Option<f64>,
    pub constraint_repairs: usize,
    pub chart_switches: usize,
    /// Distance on the sphere between the first and last Poisson vectors.
    pub closure_error: f64,
    pub min_signed_kg: Option<f64>,
    pub max_signed_kg: Option<f64>,
    pub wall_time_s: f64,
}

fn relative_drifts(energies: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let e0 = energies.clone().next().unwrap_or(0.0);
    let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
    let (mut max, mut sum, mut n) = (0.0f64, 0.0, 0usize);
    for e in energies {
        let d = (e - e0).abs() / scale;
        max = max.max(d);
        sum += d;
        n += 1;
    }
    (max, if n > 0 { sum / n as f64 } else { 0.0 })
}

pub fn full_report(traj: &Trajectory<BodySample>, wall_time_s: f64) -> DriftReport {
    let s = &traj.samples;
    let (max_e, mean_e) = relative_drifts(s.iter().map(|x| x.energy));
    DriftReport {
        kind: "full".into(),
        samples: s.len(),
        max_rel_energy_drift: max_e,
        mean_rel_energy_drift: mean_e,
        max_momentum_drift: Some(traj.max_momentum_drift()),
        max_unit_residual: s.iter().map(|x| x.unit_residual).fold(0.0, f64::max),
        max_ortho_residual: Some(s.iter().filter_map(|x| x.ortho_residual).fold(0.0, f64::max)),
        constraint_repairs: traj.repairs,
        chart_switches: 0,
        closure_error: (s[s.len() - 1].nu - s[0].nu).norm(),
        min_signed_kg: None,
        max_signed_kg: None,
        wall_time_s,
    }
}

pub fn reduced_report(traj: &ReducedTrajectory, wall_time_s: f64) -> DriftReport {
    let s = &traj.samples;
    let (max_e, mean_e) = relative_drifts(s.iter().map(|x| x.energy));
    let kg: Vec<f64> = s.iter().filter_map(|x| x.kg).collect();
    DriftReport {
        kind: "reduced".into(),
        samples: s.len(),
        max_rel_energy_drift: max_e,
        mean_rel_energy_drift: mean_e,
        max_momentum_drift: None,
        max_unit_residual: traj.max_unit_residual(),
        max_ortho_residual: None,
        constraint_repairs: traj.chart_switches,
        chart_switches: traj.chart_switches,
        closure_error: (s[s.len() - 1].nu - s[0].nu).norm(),
        min_signed_kg: kg.iter().copied().reduce(f64::min),
        max_signed_kg: kg.iter().copied().reduce(f64::max),
        wall_time_s,
    }
}

fn table<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn full_csv(traj: &Trajectory<BodySample>) -> Vec<u8> {
    table(
        &FULL_COLUMNS,
        traj.samples.iter().map(|s| {
            [s.t, s.nu.x, s.nu.y, s.nu.z, s.omega.x, s.omega.y, s.omega.z, s.energy, s.momentum, s.unit_residual]
                .into_iter()
                .map(num)
                .chain([num(s.ortho_residual.unwrap_or(0.0))])
        }),
    )
}

pub fn reduced_csv(traj: &ReducedTrajectory) -> Vec<u8> {
    table(
        &REDUCED_COLUMNS,
        traj.samples.iter().map(|s| {
            [s.t, s.nu.x, s.nu.y, s.nu.z, s.energy]
                .into_iter()
                .map(num)
                .chain([s.chart.index().to_string(), s.kg.map(num).unwrap_or_default()])
        }),
    )
}

/// Files staged in their target directories and renamed into place together,
/// so a failed run leaves no partial output behind.
#[derive(Default)]
pub struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn add(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
        tmp.write_all(bytes).and_then(|_| tmp.as_file().sync_all()).map_err(|e| CliError::io(path, e))?;
        self.files.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn commit(self) -> CliResult<()> {
        for (tmp, path) in self.files {
            tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 1e300, 6.02214076e23, 0.0, 123456.789] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1e-10), "1e-10");
    }

    #[test]
    fn drift_of_constant_is_zero() {
        assert_eq!(relative_drifts([2.0, 2.0, 2.0].into_iter()), (0.0, 0.0));
        let (max, mean) = relative_drifts([-2.0, -2.5, -1.0].into_iter());
        assert_eq!(max, 0.5);
        assert!((mean - 0.25).abs() < 1e-15);
    }

    #[test]
    fn staged_files_appear_on_commit_only() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("sub/a.txt");
        let mut st = Staged::default();
        st.add(&a, b"hello").unwrap();
        assert!(!a.exists());
        st.commit().unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), b"hello");

        let b = dir.path().join("b.txt");
        let mut st = Staged::default();
        st.add(&b, b"x").unwrap();
        drop(st);
        assert!(!b.exists());
        // the dropped temp file is gone, only sub/ is left
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

//! Run configuration files.
//!
//! JSON, `"version": 1`, unknown fields rejected. Missing optional sections
//! take the defaults below; the canonical form written by [`RunConfig::to_json`]
//! spells every field out.

use crate::error::{CliError, CliResult};
use poisson_reduce_core::{
    FullState, InertiaTensor, IntegratorSettings, Mat3, Method, PotentialSpec, ReducedState, ReducedSystemSpec,
    Rotation, Vec3,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub inertia: [f64; 3],
    #[serde(default)]
    pub potential: PotentialConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Record the signed geodesic curvature column (reduced runs only).
    #[serde(default)]
    pub record_curvature: bool,
    #[serde(default)]
    pub outputs: Vec<OutputConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Linear { c: [f64; 3] },
    Quadratic {
        #[serde(rename = "B")]
        b: [[f64; 3]; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialConfig {
    /// Rotation matrix by rows and angular velocity in the body.
    Full { q: [[f64; 3]; 3], omega: [f64; 3] },
    Reduced { nu: [f64; 3], nudot: [f64; 3], k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodConfig {
    Rk4,
    Rkf45,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: MethodConfig,
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub renorm_every: usize,
    pub t_end: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let d = IntegratorSettings::default();
        Self {
            method: MethodConfig::Rk4,
            step: d.step,
            abs_tol: d.abs_tol,
            rel_tol: d.rel_tol,
            max_step: d.max_step,
            renorm_every: d.renorm_every,
            t_end: d.t_end,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_svg: Option<PathBuf>,
}

fn vec3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn mat3(rows: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|r, c| rows[r][c])
}

impl RunConfig {
    /// Parses and validates. Errors carry the line and column of the
    /// offending field where serde reports one.
    pub fn from_json(path: &Path, text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::config(path, e))?;
        cfg.validate().map_err(|msg| CliError::config(path, msg))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(path, &text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<(), String> {
        if self.version != CONFIG_VERSION {
            return Err(format!("unsupported version {} (expected {CONFIG_VERSION})", self.version));
        }
        self.inertia().map_err(|e| e.to_string())?;
        self.potential().map_err(|e| e.to_string())?;
        self.settings().map_err(|e| e.to_string())?;
        match &self.initial {
            InitialConfig::Full { .. } => {
                if self.record_curvature {
                    return Err("record_curvature applies to reduced initial data only".into());
                }
                if let Some(Err(e)) = self.full_initial() {
                    return Err(format!("initial.q: {e}"));
                }
            }
            InitialConfig::Reduced { k, .. } => {
                if !k.is_finite() {
                    return Err("initial.k must be finite".into());
                }
                if let Some(Err(e)) = self.reduced_initial() {
                    return Err(format!("initial: {e}"));
                }
            }
        }
        for (i, out) in self.outputs.iter().enumerate() {
            if out.trajectory_csv.is_none() && out.report_json.is_none() && out.plot_svg.is_none() {
                return Err(format!("outputs[{i}] names no file"));
            }
        }
        Ok(())
    }

    pub fn inertia(&self) -> poisson_reduce_core::Result<InertiaTensor> {
        let [a, b, c] = self.inertia;
        InertiaTensor::new(a, b, c)
    }

    pub fn potential(&self) -> poisson_reduce_core::Result<PotentialSpec> {
        let p = match &self.potential {
            PotentialConfig::Zero => PotentialSpec::Zero,
            PotentialConfig::Linear { c } => PotentialSpec::linear(vec3(c)),
            PotentialConfig::Quadratic { b } => PotentialSpec::quadratic(mat3(b))?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn settings(&self) -> poisson_reduce_core::Result<IntegratorSettings> {
        let i = &self.integrator;
        let s = IntegratorSettings {
            method: match i.method {
                MethodConfig::Rk4 => Method::Rk4,
                MethodConfig::Rkf45 => Method::Rkf45,
            },
            step: i.step,
            abs_tol: i.abs_tol,
            rel_tol: i.rel_tol,
            max_step: i.max_step,
            renorm_every: i.renorm_every,
            t_end: i.t_end,
            record_rejected: false,
        };
        s.validate()?;
        Ok(s)
    }

    /// `None` when the initial data is reduced.
    pub fn full_initial(&self) -> Option<poisson_reduce_core::Result<FullState>> {
        match &self.initial {
            InitialConfig::Full { q, omega } => Some(Rotation::new(mat3(q)).map(|q| FullState::new(q, vec3(omega)))),
            InitialConfig::Reduced { .. } => None,
        }
    }

    /// Reduced state and momentum level; `None` when the initial data is full.
    pub fn reduced_initial(&self) -> Option<poisson_reduce_core::Result<(ReducedState, f64)>> {
        match &self.initial {
            InitialConfig::Reduced { nu, nudot, k } => Some(ReducedState::new(vec3(nu), vec3(nudot)).map(|s| (s, *k))),
            InitialConfig::Full { .. } => None,
        }
    }

    pub fn reduced_spec(&self, k: f64) -> poisson_reduce_core::Result<ReducedSystemSpec> {
        Ok(ReducedSystemSpec::new(self.inertia()?, self.potential()?, k))
    }
}

/// Output paths resolved against the directory holding the config.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

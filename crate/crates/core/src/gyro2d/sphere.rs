//! Stereographic atlas of the Poisson sphere and the reduced rigid body in it.
//!
//! Both charts are positively oriented for the outward normal. The north
//! chart has its origin at `nu = (0, 0, 1)`:
//! `q = (a1, a2) / (1 + a3)`. The south chart has its origin at
//! `nu = (0, 0, -1)` and flips the second coordinate to keep the orientation:
//! `q = (a1, -a2) / (1 - a3)`. On the overlap `q_S = (q1, -q2) / |q_N|^2`.

use super::{
    gyro_rhs, signed_curvature_at, ChartState, EnergyLevel, GyroSystem2D, Mat2, MaupertuisMetric, Vec2,
};
use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorSettings, StepHook};
use crate::reduction::{
    amended_potential_eval, curvature_coefficient_raw, reduced_metric_raw, ReducedState, ReducedSystemSpec,
};
use crate::so3::Vec3;
use log::{debug, warn};
use std::fmt;

pub const DEFAULT_SWITCH_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChartId {
    North,
    South,
}

impl ChartId {
    /// 0 for north, 1 for south.
    pub fn index(self) -> u8 {
        match self {
            ChartId::North => 0,
            ChartId::South => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            ChartId::North => ChartId::South,
            ChartId::South => ChartId::North,
        }
    }

    fn from_flag(flag: f64) -> Self {
        if flag < 0.5 {
            ChartId::North
        } else {
            ChartId::South
        }
    }

    fn flag(self) -> f64 {
        f64::from(self.index())
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChartId::North => "north",
            ChartId::South => "south",
        })
    }
}

/// One stereographic chart of the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    pub id: ChartId,
    pub switch_radius: f64,
}

impl Chart {
    pub fn new(id: ChartId) -> Self {
        Self { id, switch_radius: DEFAULT_SWITCH_RADIUS }
    }

    pub fn north() -> Self {
        Self::new(ChartId::North)
    }

    pub fn south() -> Self {
        Self::new(ChartId::South)
    }

    /// The chart whose origin is nearer to `nu`.
    pub fn best_for(nu: &Vec3) -> Self {
        if nu.z >= 0.0 {
            Self::north()
        } else {
            Self::south()
        }
    }

    fn sign(&self) -> f64 {
        match self.id {
            ChartId::North => 1.0,
            ChartId::South => -1.0,
        }
    }

    pub fn to_chart(&self, nu: &Vec3) -> Vec2 {
        let s = self.sign();
        Vec2::new(nu.x, s * nu.y) / (1.0 + s * nu.z)
    }

    pub fn to_sphere(&self, q: &Vec2) -> Vec3 {
        let s = self.sign();
        let r2 = q.norm_squared();
        Vec3::new(2.0 * q.x, s * 2.0 * q.y, s * (1.0 - r2)) / (1.0 + r2)
    }

    /// Coordinate vectors `(d nu / dq1, d nu / dq2)`.
    pub fn jacobian(&self, q: &Vec2) -> (Vec3, Vec3) {
        let s = self.sign();
        let d = 1.0 + q.norm_squared();
        let d2 = d * d;
        let (x, y) = (q.x, q.y);
        let e1 = Vec3::new(2.0 * (d - 2.0 * x * x) / d2, -s * 4.0 * x * y / d2, -s * 4.0 * x / d2);
        let e2 = Vec3::new(-4.0 * x * y / d2, s * 2.0 * (d - 2.0 * y * y) / d2, -s * 4.0 * y / d2);
        (e1, e2)
    }

    /// Second derivatives `d^2 nu / dq_i dq_j`, indexed `[i][j]`.
    pub fn hessian(&self, q: &Vec2) -> [[Vec3; 2]; 2] {
        let s = self.sign();
        let d = 1.0 + q.norm_squared();
        let (d2, d3) = (d * d, d * d * d);
        let f = Vec3::new(2.0 * q.x, 2.0 * q.y, 1.0 - q.norm_squared());
        let df = [Vec3::new(2.0, 0.0, -2.0 * q.x), Vec3::new(0.0, 2.0, -2.0 * q.y)];
        let mut out = [[Vec3::zeros(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let delta = if i == j { 1.0 } else { 0.0 };
                let v = Vec3::new(0.0, 0.0, -2.0 * delta) / d
                    - df[i] * (2.0 * q[j] / d2)
                    - df[j] * (2.0 * q[i] / d2)
                    - f * (2.0 * delta / d2)
                    + f * (8.0 * q[i] * q[j] / d3);
                out[i][j] = Vec3::new(v.x, s * v.y, s * v.z);
            }
        }
        out
    }

    /// Chart velocity of a tangent vector `nudot` at `nu`.
    pub fn velocity_to_chart(&self, nu: &Vec3, nudot: &Vec3) -> Vec2 {
        let s = self.sign();
        let den = 1.0 + s * nu.z;
        Vec2::new(nudot.x, s * nudot.y) / den - Vec2::new(nu.x, s * nu.y) * (s * nudot.z / (den * den))
    }

    pub fn velocity_to_sphere(&self, q: &Vec2, qdot: &Vec2) -> Vec3 {
        let (e1, e2) = self.jacobian(q);
        e1 * qdot.x + e2 * qdot.y
    }

    /// Density of the outward area form of the unit sphere against `dq1 ^ dq2`.
    pub fn area_density(&self, q: &Vec2) -> f64 {
        let (e1, e2) = self.jacobian(q);
        e1.cross(&e2).dot(&self.to_sphere(q))
    }

    pub fn state_from_sphere(&self, nu: &Vec3, nudot: &Vec3) -> ChartState {
        ChartState::new(self.to_chart(nu), self.velocity_to_chart(nu, nudot))
    }

    pub fn state_to_sphere(&self, s: &ChartState) -> (Vec3, Vec3) {
        (self.to_sphere(&s.q), self.velocity_to_sphere(&s.q, &s.qdot))
    }
}

/// The reduced rigid body written in one chart.
#[derive(Debug, Clone)]
pub struct ReducedChartSystem {
    pub spec: ReducedSystemSpec,
    pub chart: Chart,
    /// Multiplies the gyroscopic density; 1 for the physical system.
    pub kappa_scale: f64,
}

/// The reduced gyroscopic system of `spec` in `chart`.
pub fn reduced_system_in_chart(spec: &ReducedSystemSpec, chart: Chart) -> ReducedChartSystem {
    ReducedChartSystem { spec: spec.clone(), chart, kappa_scale: 1.0 }
}

impl ReducedChartSystem {
    /// Reduced energy `m~(nudot, nudot) / 2 + V_k(nu)` of a sphere state.
    pub fn sphere_energy(&self, nu: &Vec3, nudot: &Vec3) -> f64 {
        let spec = &self.spec;
        0.5 * reduced_metric_raw(nudot, nudot, nu, &spec.inertia)
            + amended_potential_eval(nu, spec.k, &spec.inertia, &spec.potential).0
    }
}

impl GyroSystem2D for ReducedChartSystem {
    fn metric(&self, q: &Vec2) -> Mat2 {
        let nu = self.chart.to_sphere(q);
        let (e1, e2) = self.chart.jacobian(q);
        let i = &self.spec.inertia;
        let a12 = reduced_metric_raw(&e1, &e2, &nu, i);
        Mat2::new(reduced_metric_raw(&e1, &e1, &nu, i), a12, a12, reduced_metric_raw(&e2, &e2, &nu, i))
    }

    fn metric_gradient(&self, q: &Vec2) -> Option<[Mat2; 2]> {
        // a_ij = P b(e_i, e_j) / D(nu), b(u, w) = sum u_m w_m / I_m
        let nu = self.chart.to_sphere(q);
        let (e1, e2) = self.chart.jacobian(q);
        let e = [e1, e2];
        let hess = self.chart.hessian(q);
        let moments = self.spec.inertia.moments();
        let p = moments[0] * moments[1] * moments[2];
        let b = |u: &Vec3, w: &Vec3| (0..3).map(|m| u[m] * w[m] / moments[m]).sum::<f64>();
        let d = self.spec.inertia.vertical_norm_sq(&nu);
        let inu = self.spec.inertia.apply(&nu);
        let mut out = [Mat2::zeros(); 2];
        for (l, slot) in out.iter_mut().enumerate() {
            let dd = 2.0 * inu.dot(&e[l]);
            for i in 0..2 {
                for j in i..2 {
                    let db = b(&hess[l][i], &e[j]) + b(&e[i], &hess[l][j]);
                    let v = p * (db / d - b(&e[i], &e[j]) * dd / (d * d));
                    slot[(i, j)] = v;
                    slot[(j, i)] = v;
                }
            }
        }
        Some(out)
    }

    fn potential(&self, q: &Vec2) -> (f64, Vec2) {
        let nu = self.chart.to_sphere(q);
        let (e1, e2) = self.chart.jacobian(q);
        let (v, grad) = amended_potential_eval(&nu, self.spec.k, &self.spec.inertia, &self.spec.potential);
        (v, Vec2::new(grad.dot(&e1), grad.dot(&e2)))
    }

    fn kappa(&self, q: &Vec2) -> f64 {
        if self.spec.k == 0.0 {
            return 0.0;
        }
        let nu = self.chart.to_sphere(q);
        self.kappa_scale * self.spec.k * curvature_coefficient_raw(&nu, &self.spec.inertia) * self.chart.area_density(q)
    }
}

/// One stored point of a reduced trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSample {
    pub t: f64,
    pub nu: Vec3,
    pub nudot: Vec3,
    pub chart: ChartId,
    pub state: ChartState,
    /// Reduced energy.
    pub energy: f64,
    /// Signed geodesic curvature in the Maupertuis metric of the initial
    /// energy, outward orientation; present when requested.
    pub kg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    pub samples: Vec<ReducedSample>,
    pub chart_switches: usize,
}

impl ReducedTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
        self.samples.iter().map(|s| (s.energy - e0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn max_unit_residual(&self) -> f64 {
        self.samples.iter().map(|s| (s.nu.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Configurable reduced simulation.
#[derive(Debug, Clone)]
pub struct ReducedSimulation {
    spec: ReducedSystemSpec,
    chart: Option<ChartId>,
    switching: bool,
    switch_radius: f64,
    kappa_scale: f64,
    curvature: bool,
}

impl ReducedSimulation {
    pub fn new(spec: ReducedSystemSpec) -> Self {
        Self {
            spec,
            chart: None,
            switching: true,
            switch_radius: DEFAULT_SWITCH_RADIUS,
            kappa_scale: 1.0,
            curvature: false,
        }
    }

    /// Starts in the given chart instead of the nearer one.
    pub fn start_chart(mut self, id: ChartId) -> Self {
        self.chart = Some(id);
        self
    }

    /// Keeps the starting chart for the whole run.
    pub fn without_switching(mut self) -> Self {
        self.switching = false;
        self
    }

    pub fn switch_radius(mut self, r: f64) -> Self {
        self.switch_radius = r;
        self
    }

    /// Scales the gyroscopic density. Only meant for sensitivity checks.
    pub fn kappa_scale(mut self, scale: f64) -> Self {
        self.kappa_scale = scale;
        self
    }

    /// Records the signed geodesic curvature at every sample.
    pub fn with_curvature(mut self, on: bool) -> Self {
        self.curvature = on;
        self
    }

    fn system(&self, id: ChartId) -> ReducedChartSystem {
        ReducedChartSystem {
            spec: self.spec.clone(),
            chart: Chart { id, switch_radius: self.switch_radius },
            kappa_scale: self.kappa_scale,
        }
    }

    pub fn run(&self, initial: &ReducedState, settings: &IntegratorSettings) -> Result<ReducedTrajectory> {
        settings.validate()?;
        self.spec.potential.validate()?;
        if !(self.switch_radius > 1.0) {
            return Err(Error::InvalidSettings(format!("switch radius {} must exceed 1", self.switch_radius)));
        }
        let start = self.chart.unwrap_or_else(|| Chart::best_for(&initial.nu()).id);
        let systems = [self.system(ChartId::North), self.system(ChartId::South)];
        let pick = |flag: f64| &systems[ChartId::from_flag(flag).index() as usize];

        let s0 = pick(start.flag()).chart.state_from_sphere(&initial.nu(), &initial.nudot());
        let y0 = [start.flag(), s0.q.x, s0.q.y, s0.qdot.x, s0.qdot.y];

        let rhs = |_t: f64, y: &[f64], d: &mut [f64]| {
            let (v, acc) = gyro_rhs(pick(y[0]), &ChartState::from_slice(&y[1..]))?;
            d.copy_from_slice(&[0.0, v.x, v.y, acc.x, acc.y]);
            Ok(())
        };
        let mut switches = 0usize;
        let radius = self.switch_radius;
        let switching = self.switching;
        let mut hook = |_step: usize, _t: f64, y: &mut [f64]| {
            let s = ChartState::from_slice(&y[1..]);
            if switching && s.q.norm() > radius {
                let from = pick(y[0]).chart;
                let (nu, nudot) = from.state_to_sphere(&s);
                let to = Chart::new(from.id.other());
                let next = to.state_from_sphere(&nu, &nudot);
                y.copy_from_slice(&[to.id.flag(), next.q.x, next.q.y, next.qdot.x, next.qdot.y]);
                switches += 1;
            }
            Ok(())
        };
        let hooks: &mut [&mut dyn StepHook] = &mut [&mut hook];
        let solution = integrate(rhs, &y0, settings, hooks)?;
        debug!("simulate_reduced: {} steps, {} chart switches", solution.records.len() - 1, switches);

        let level = EnergyLevel::new(systems[0].sphere_energy(&initial.nu(), &initial.nudot()))?;
        let mut samples = Vec::with_capacity(solution.records.len());
        for rec in solution.accepted() {
            let id = ChartId::from_flag(rec.state[0]);
            let sys = pick(rec.state[0]);
            let state = ChartState::from_slice(&rec.state[1..]);
            let (nu, nudot) = sys.chart.state_to_sphere(&state);
            let kg = if self.curvature {
                let acc = Vec2::new(rec.derivative[3], rec.derivative[4]);
                let m = MaupertuisMetric::new(sys, level);
                m.margin(&state.q)?;
                Some(signed_curvature_at(&m, &state.q, &state.qdot, &acc, 1.0)?)
            } else {
                None
            };
            samples.push(ReducedSample { t: rec.t, nu, nudot, chart: id, state, energy: sys.sphere_energy(&nu, &nudot), kg });
        }
        if !self.spec.inertia.strict_triangle() {
            warn!("inertia {:?} violates the strict triangle inequalities", self.spec.inertia.moments());
        }
        Ok(ReducedTrajectory { samples, chart_switches: switches })
    }
}

/// Integrates the reduced system with automatic chart switching.
pub fn simulate_reduced(
    spec: &ReducedSystemSpec,
    initial: &ReducedState,
    settings: &IntegratorSettings,
) -> Result<ReducedTrajectory> {
    ReducedSimulation::new(spec.clone()).run(initial, settings)
}

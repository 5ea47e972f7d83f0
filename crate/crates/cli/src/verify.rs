//! The property battery behind `verify`.

use crate::config::{InitialConfig, RunConfig};
use poisson_reduce_core::body::momentum;
use poisson_reduce_core::gyro2d::{
    energy, integrate_chart, integrate_curvature_flow, reduced_system_in_chart, reparameterize,
    signed_geodesic_curvature, Chart, ChartState, EnergyLevel, EuclideanPlane, GyroSystem2D, MaupertuisMetric,
    ReducedChartSystem, TimeChange, Vec2,
};
use poisson_reduce_core::reduction::{
    connection_value, curvature_coefficient, horizontal_lift, reconstruct_velocity, sphere_integral,
};
use poisson_reduce_core::so3::{fd_exterior_derivative_1form, poisson_projection, TangentSO3};
use poisson_reduce_core::{
    simulate_body, BodyInitial, BodyPhaseState, FullState, InertiaTensor, IntegratorSettings, PotentialSpec,
    ReducedSimulation, ReducedState, ReducedSystemSpec, Result, Rotation, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub status: Status,
    /// Worst measured value; compare with `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub failing: Vec<&'static str>,
    pub checks: Vec<Check>,
}

/// Physical setting the battery runs against.
#[derive(Debug, Clone)]
pub struct Setting {
    pub inertia: InertiaTensor,
    pub potential: PotentialSpec,
    /// Reduced initial data and momentum for the projection check.
    pub initial: (ReducedState, f64),
    pub seed: u64,
    /// Gyroscopic density scale used by the reduced side of the projection check.
    pub kappa_scale: f64,
}

fn tangent(nu: &Vec3, v: &Vec3) -> Vec3 {
    v - nu * nu.dot(v)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

impl Setting {
    pub fn defaults(seed: u64) -> Self {
        let nu = Vec3::new(0.3, -0.5, 0.7).normalize();
        let s = ReducedState::new(nu, tangent(&nu, &Vec3::new(0.4, 0.2, -0.3))).expect("tangent by construction");
        Self {
            inertia: InertiaTensor::new(2.0, 1.5, 1.0).expect("positive"),
            potential: PotentialSpec::linear(Vec3::z()),
            initial: (s, 1.0),
            seed,
            kappa_scale: 1.0,
        }
    }

    /// Inertia, potential and initial data taken from a run config.
    pub fn from_config(cfg: &RunConfig, seed: u64) -> Result<Self> {
        let inertia = cfg.inertia()?;
        let initial = match &cfg.initial {
            InitialConfig::Reduced { .. } => cfg.reduced_initial().expect("reduced")?,
            InitialConfig::Full { .. } => {
                let full = cfg.full_initial().expect("full")?;
                let nu = poisson_projection(&full.q);
                let k = momentum(&BodyPhaseState { nu, omega: full.omega }, &inertia);
                (ReducedState::new(nu, nu.cross(&full.omega))?, k)
            }
        };
        Ok(Self { inertia, potential: cfg.potential()?, initial, seed, kappa_scale: 1.0 })
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

fn check(id: &'static str, ok: bool, value: f64, tolerance: f64, detail: String) -> Check {
    Check { id, status: if ok { Status::Pass } else { Status::Fail }, value, tolerance, detail }
}

fn errored(id: &'static str, tolerance: f64, e: poisson_reduce_core::Error) -> Check {
    check(id, false, f64::NAN, tolerance, format!("error: {e}"))
}

fn drifts(inertia: &InertiaTensor, potential: &PotentialSpec, nu: Vec3, h: f64, repairs: bool) -> Result<(f64, f64)> {
    let s = BodyPhaseState::new(nu, Vec3::new(1.0, 2.0, 3.0))?;
    let mut settings = IntegratorSettings::rk4(h, 50.0);
    if !repairs {
        settings.renorm_every = usize::MAX;
    }
    let traj = simulate_body(&BodyInitial::Poisson(s), inertia, potential, &settings)?;
    Ok((traj.max_relative_energy_drift(), traj.max_momentum_drift()))
}

fn conservation(set: &Setting) -> Check {
    const TOL: f64 = 1e-8;
    let nu = random_unit(&mut set.rng(1));
    match drifts(&set.inertia, &set.potential, nu, 1e-3, true) {
        Ok((e, j)) => check(
            "conservation",
            e <= TOL && j <= TOL,
            e.max(j),
            TOL,
            format!("RK4 h=1e-3, t<=50: max dE/E0 {e:.2e}, max dJ {j:.2e}"),
        ),
        Err(e) => errored("conservation", TOL, e),
    }
}

/// Drifts below this are rounding, not truncation, and carry no order information.
const ROUNDING_FLOOR: f64 = 5e-14;

/// Step-halving ratio of the drifts on the reference heavy top, whatever the
/// setting: symmetric bodies can show a higher order (ratio near 32).
/// Measured without constraint repairs: they fire on a threshold, so the drift
/// they leave is not smooth in the step.
fn conservation_order(set: &Setting) -> Check {
    let id = "conservation_order";
    let reference = Setting::defaults(set.seed);
    let nu = random_unit(&mut set.rng(1));
    let run = |h| drifts(&reference.inertia, &reference.potential, nu, h, false);
    let (coarse, fine) = match (run(1e-3), run(5e-4)) {
        (Ok(c), Ok(f)) => (c, f),
        (Err(e), _) | (_, Err(e)) => return errored(id, 16.0, e),
    };
    let mut ratios = Vec::new();
    for (name, c, f) in [("E", coarse.0, fine.0), ("J", coarse.1, fine.1)] {
        if c > ROUNDING_FLOOR {
            ratios.push((name, c / f));
        }
    }
    if ratios.is_empty() {
        return Check {
            id,
            status: Status::Skip,
            value: coarse.0.max(coarse.1),
            tolerance: ROUNDING_FLOOR,
            detail: "drifts at the rounding floor; no order to measure".into(),
        };
    }
    let ok = ratios.iter().all(|(_, r)| (12.0..=20.0).contains(r));
    // the ratio furthest from the RK4 value 16
    let worst = ratios.iter().map(|(_, r)| *r).max_by(|a, b| (a - 16.0).abs().total_cmp(&(b - 16.0).abs())).unwrap_or(16.0);
    let parts: Vec<String> = ratios.iter().map(|(n, r)| format!("{n} {r:.1}")).collect();
    check(id, ok, worst, 16.0, format!("heavy top, step halving 1e-3 -> 5e-4, no repairs: ratios {} (want [12, 20])", parts.join(", ")))
}

fn projection(set: &Setting) -> Check {
    const TOL: f64 = 1e-5;
    let run = || -> Result<f64> {
        let (s, k) = set.initial;
        let omega = reconstruct_velocity(&s, k, &set.inertia);
        let q0 = Rotation::with_poisson_vector(&s.nu())?;
        let settings = IntegratorSettings::rk4(1e-3, 10.0);
        let full = simulate_body(&BodyInitial::Full(FullState::new(q0, omega)), &set.inertia, &set.potential, &settings)?;
        let spec = ReducedSystemSpec::new(set.inertia, set.potential.clone(), k);
        let red = ReducedSimulation::new(spec).kappa_scale(set.kappa_scale).run(&s, &settings)?;
        Ok(full
            .samples
            .iter()
            .zip(&red.samples)
            .map(|(a, b)| (poisson_projection(a.q.as_ref().expect("full run")) - b.nu).norm())
            .fold(0.0, f64::max))
    };
    match run() {
        Ok(d) => check("projection", d <= TOL, d, TOL, format!("sup |p(Q(t)) - nu(t)| over t<=10 = {d:.2e}")),
        Err(e) => errored("projection", TOL, e),
    }
}

/// Reduced system with the weight pulling towards the north pole, in the north chart.
fn pendulum(set: &Setting, k: f64, velocity: Vec3) -> (ReducedChartSystem, ChartState) {
    let spec = ReducedSystemSpec::new(set.inertia, PotentialSpec::linear(Vec3::new(0.0, 0.0, -1.0)), k);
    let nu = Vec3::new(0.25, -0.15, 1.0).normalize();
    (reduced_system_in_chart(&spec, Chart::north()), Chart::north().state_from_sphere(&nu, &tangent(&nu, &velocity)))
}

fn time_change(set: &Setting) -> Check {
    const TOL: f64 = 1e-5;
    let run = || -> Result<(f64, f64)> {
        let (sys, start) = pendulum(set, 0.5, Vec3::new(0.3, 0.5, 0.0));
        let level = EnergyLevel::new(energy(&sys, &start))?;
        let m = MaupertuisMetric::new(&sys, level);
        let direct = integrate_chart(&sys, &start, &IntegratorSettings::rk4(1e-3, 5.0))?;
        let to_tau = reparameterize(&direct, &sys, level, TimeChange::TimeToArclength)?;
        let tau_end = to_tau.target_end() * 1.01;
        let flow = integrate_curvature_flow(&sys, level, &m.to_arclength(&start)?, &IntegratorSettings::rk4(1e-3, tau_end))?;
        let to_t = reparameterize(&flow, &sys, level, TimeChange::ArclengthToTime)?;
        let mut fwd = 0.0f64;
        for r in direct.accepted() {
            fwd = fwd.max((to_t.state_at_target(r.t)?.q - Vec2::new(r.state[0], r.state[1])).norm());
        }
        let mut back = 0.0f64;
        for r in flow.accepted().take_while(|r| r.t <= to_tau.target_end()) {
            back = back.max((to_tau.state_at_target(r.t)?.q - Vec2::new(r.state[0], r.state[1])).norm());
        }
        Ok((fwd, back))
    };
    match run() {
        Ok((f, b)) => check(
            "time_change",
            f <= TOL && b <= TOL,
            f.max(b),
            TOL,
            format!("curvature flow vs direct, t<=5: tau->t {f:.2e}, t->tau {b:.2e}"),
        ),
        Err(e) => errored("time_change", TOL, e),
    }
}

/// Measured against predicted curvature on the stretches of a trajectory that
/// stay clear of the turning curve, where the difference stencil is reliable.
fn curvature_along(set: &Setting, k: f64, velocity: Vec3) -> Result<(Vec<f64>, Vec<f64>)> {
    const MIN_MARGIN: f64 = 0.15;
    let (sys, start) = pendulum(set, k, velocity);
    let level = EnergyLevel::new(energy(&sys, &start))?;
    let direct = integrate_chart(&sys, &start, &IntegratorSettings::rk4(1e-3, 5.0))?;
    let to_tau = reparameterize(&direct, &sys, level, TimeChange::TimeToArclength)?;
    let dtau = 2e-3;
    let n = (to_tau.target_end() / dtau) as usize;
    let m = MaupertuisMetric::new(&sys, level);
    let mut segments: Vec<Vec<Vec2>> = vec![Vec::new()];
    for i in 0..n {
        let q = to_tau.state_at_target(i as f64 * dtau)?.q;
        if level.h - sys.potential(&q).0 >= MIN_MARGIN {
            segments.last_mut().expect("non-empty").push(q);
        } else if !segments.last().expect("non-empty").is_empty() {
            segments.push(Vec::new());
        }
    }
    let (mut measured, mut predicted) = (Vec::new(), Vec::new());
    for seg in segments.iter().filter(|s| s.len() >= 5) {
        measured.extend(signed_geodesic_curvature(seg, dtau, &m, 1.0)?);
        for q in &seg[2..seg.len() - 2] {
            predicted.push(sys.kappa(q) / m.metric(q).determinant().sqrt());
        }
    }
    Ok((measured, predicted))
}

fn curvature_law(set: &Setting) -> Check {
    const TOL: f64 = 1e-3;
    const GEODESIC_TOL: f64 = 5e-4;
    let run = || -> Result<(bool, f64, String)> {
        let mut ok = true;
        let mut worst = 0.0f64;
        let mut parts = Vec::new();
        // without the triangle inequalities the density changes sign
        let sign_law = set.inertia.strict_triangle();
        for k in [1.0, -1.0] {
            let (measured, predicted) = curvature_along(set, k, Vec3::new(-1.0, 0.6, 0.0))?;
            let rel = measured.iter().zip(&predicted).map(|(m, p)| ((m - p) / p).abs()).fold(0.0, f64::max);
            let signed = measured.iter().all(|m| m * k > 0.0);
            ok &= measured.len() >= 100 && rel <= TOL && (signed || !sign_law);
            worst = worst.max(rel);
            parts.push(format!("k={k:+}: {} pts, rel err {rel:.1e}, sign ok {signed}", measured.len()));
        }
        let (geodesic, _) = curvature_along(set, 0.0, Vec3::new(0.6, 1.0, 0.0))?;
        let flat = geodesic.iter().map(|m| m.abs()).fold(0.0, f64::max);
        ok &= geodesic.len() >= 100 && flat <= GEODESIC_TOL;
        parts.push(format!("k=0: max|kg| {flat:.1e}"));
        if !sign_law {
            parts.push("sign law not implied (triangle inequalities fail)".into());
        }
        Ok((ok, worst, parts.join("; ")))
    };
    match run() {
        Ok((ok, worst, detail)) => check("curvature_law", ok, worst, TOL, detail),
        Err(e) => errored("curvature_law", TOL, e),
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
    let axis = random_unit(rng);
    Rotation::exp(&(axis * rng.gen_range(0.0..PI)))
}

fn exterior_derivative(set: &Setting) -> Check {
    const TOL: f64 = 1e-4;
    let mut rng = set.rng(2);
    let inertia = &set.inertia;
    let eta = |t: &TangentSO3| connection_value(&poisson_projection(&t.q), &t.omega, inertia).unwrap_or(f64::NAN);
    let mut rel = 0.0f64;
    for _ in 0..20 {
        let q = random_rotation(&mut rng);
        let nu = poisson_projection(&q);
        let horizontal = |v: Vec3| v - nu * (inertia.apply(&v).dot(&nu) / inertia.vertical_norm_sq(&nu));
        let u = horizontal(random_unit(&mut rng));
        let v = horizontal(random_unit(&mut rng));
        let d_eta = fd_exterior_derivative_1form(eta, &q, &u, &v, 1e-3);
        let area = nu.dot(&nu.cross(&u).cross(&nu.cross(&v)));
        let descended = match curvature_coefficient(&nu, inertia) {
            Ok(c) => c * area,
            Err(e) => return errored("exterior_derivative", TOL, e),
        };
        rel = rel.max(((d_eta - descended) / descended).abs());
    }
    check("exterior_derivative", rel <= TOL, rel, TOL, format!("d(eta) vs descended curvature at 20 random Q: rel err {rel:.1e}"))
}

fn maurer_cartan(set: &Setting) -> Check {
    let eps = 1e-3;
    let tol = 5.0 * eps * eps;
    let mut rng = set.rng(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let q = random_rotation(&mut rng);
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let val = fd_exterior_derivative_1form(|t: &TangentSO3| t.omega[i], &q, &Vec3::ith(j, 1.0), &Vec3::ith(k, 1.0), eps);
            worst = worst.max((val + 1.0).abs());
        }
    }
    check("maurer_cartan", worst <= tol, worst, tol, format!("d omega_i + omega_j ^ omega_k at 20 random Q: {worst:.1e}"))
}

fn total_curvature(set: &Setting) -> Check {
    const TOL: f64 = 1e-3;
    let total = sphere_integral(|nu| curvature_coefficient(nu, &set.inertia).unwrap_or(f64::NAN), 400, 800);
    let err = (total - 4.0 * PI).abs();
    check("total_curvature", err <= TOL, err, TOL, format!("integral over the sphere {total:.6} vs 4 pi"))
}

fn grid(n: usize) -> impl Iterator<Item = Vec3> {
    (0..n).flat_map(move |i| {
        let theta = (i as f64 + 0.5) * PI / n as f64;
        (0..n).map(move |j| {
            let phi = j as f64 * 2.0 * PI / n as f64;
            Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
        })
    })
}

fn positivity(set: &Setting) -> Check {
    if !set.inertia.strict_triangle() {
        let m = set.inertia.moments();
        log::warn!("positivity check skipped: inertia {m:?} violates the strict triangle inequalities");
        return Check {
            id: "positivity",
            status: Status::Skip,
            value: f64::NAN,
            tolerance: 0.0,
            detail: format!("warning: inertia {m:?} violates the strict triangle inequalities; no sign is implied"),
        };
    }
    let min = grid(100).map(|nu| curvature_coefficient(&nu, &set.inertia).unwrap_or(f64::NAN)).fold(f64::INFINITY, f64::min);
    check("positivity", min > 0.0, min, 0.0, format!("min curvature coefficient on a 100x100 grid {min:.4}"))
}

fn equal_moments(_set: &Setting) -> Check {
    const TOL: f64 = 1e-12;
    let mut worst = 0.0f64;
    for c in [0.5, 1.0, 2.0, 7.5] {
        let i = InertiaTensor::new(c, c, c).expect("positive");
        for nu in grid(100) {
            worst = worst.max((curvature_coefficient(&nu, &i).unwrap_or(f64::NAN) - 1.0).abs());
        }
    }
    check("equal_moments", worst <= TOL, worst, TOL, format!("|C - 1| for I = (c, c, c) on a 100x100 grid: {worst:.1e}"))
}

fn lift_contracts(set: &Setting) -> Check {
    const TOL: f64 = 1e-12;
    let mut rng = set.rng(4);
    let mut worst = 0.0f64;
    for n in 0..1000 {
        let i = if n % 2 == 0 {
            set.inertia
        } else {
            InertiaTensor::new(rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0)).expect("positive")
        };
        let nu = random_unit(&mut rng);
        let nudot = tangent(&nu, &(random_unit(&mut rng) * rng.gen_range(0.0..3.0)));
        let Ok(s) = ReducedState::new(nu, nudot) else { continue };
        let w0 = horizontal_lift(&s, &i);
        worst = worst.max(i.apply(&w0).dot(&nu).abs()).max((nu.cross(&w0) - s.nudot()).amax());
    }
    check("lift_contracts", worst <= TOL, worst, TOL, format!("I w0 . nu and nu x w0 - nudot on 1000 states: {worst:.1e}"))
}

fn free_top(_set: &Setting) -> Check {
    const TOL: f64 = 1e-8;
    let omega = Vec3::new(0.3, -1.2, 0.8);
    let run = || -> Result<f64> {
        let traj = simulate_body(
            &BodyInitial::Full(FullState::new(Rotation::exp(&Vec3::new(0.4, 0.1, -0.7)), omega)),
            &InertiaTensor::new(1.5, 1.5, 1.5)?,
            &PotentialSpec::Zero,
            &IntegratorSettings::rk4(1e-3, 2.0 * PI / omega.norm()),
        )?;
        Ok((traj.samples[traj.len() - 1].nu - traj.samples[0].nu).norm())
    };
    match run() {
        Ok(c) => check("free_top", c <= TOL, c, TOL, format!("closure after one period {c:.1e}")),
        Err(e) => errored("free_top", TOL, e),
    }
}

fn larmor(_set: &Setting) -> Check {
    const TOL: f64 = 1e-6;
    let run = || -> Result<f64> {
        let mut worst = 0.0f64;
        for b in [1.5f64, -0.7] {
            let v = Vec2::new(0.6, -0.9);
            let sol = integrate_chart(
                &EuclideanPlane { field: b },
                &ChartState::new(Vec2::zeros(), v),
                &IntegratorSettings::rk4(1e-3, 2.0 * PI / b.abs()),
            )?;
            let r = v.norm() / b.abs();
            let centre = Vec2::new(v.y, -v.x) / v.norm() * (r * b.signum());
            for rec in sol.accepted() {
                worst = worst.max(((Vec2::new(rec.state[0], rec.state[1]) - centre).norm() - r).abs());
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => check("larmor", w <= TOL, w, TOL, format!("radius error of charged-particle circles {w:.1e}")),
        Err(e) => errored("larmor", TOL, e),
    }
}

type CheckFn = fn(&Setting) -> Check;

pub const CHECKS: [(&str, CheckFn); 13] = [
    ("conservation", conservation),
    ("conservation_order", conservation_order),
    ("projection", projection),
    ("time_change", time_change),
    ("curvature_law", curvature_law),
    ("exterior_derivative", exterior_derivative),
    ("maurer_cartan", maurer_cartan),
    ("total_curvature", total_curvature),
    ("positivity", positivity),
    ("equal_moments", equal_moments),
    ("lift_contracts", lift_contracts),
    ("free_top", free_top),
    ("larmor", larmor),
];

/// Runs every check on the current rayon pool; order of the table is fixed.
pub fn run_battery(set: &Setting) -> VerifyReport {
    let checks: Vec<Check> = CHECKS.par_iter().map(|(_, f)| f(set)).collect();
    let failing: Vec<&'static str> = checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.id).collect();
    VerifyReport { seed: set.seed, passed: failing.is_empty(), failing, checks }
}

//! Rigid body with a fixed point in an axially symmetric field.
//!
//! The configuration space is SO(3) with the left-invariant metric
//! `m(w1, w2) = I w1 . w2`; the potential depends on the configuration only
//! through the Poisson vector `nu` (first row of `Q`). The motion is written in
//! Euler-Poisson form
//!
//! ```text
//! nu'    = nu x omega
//! omega' = I^{-1} [ (I omega) x omega + nu x grad V(nu) ]
//! ```
//!
//! which conserves the total energy and the momentum `I omega . nu` of the
//! rotations about the vertical.

use std::fmt;
use std::sync::Arc;

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorSettings, Solution, StepHook};
use crate::so3::{check_unit, hat, poisson_projection, reorthonormalize, Mat3, Rotation, Vec3};

/// Residual above which a simulation is abandoned.
pub const INVARIANT_HARD_LIMIT: f64 = 1e-3;
/// Residual above which a scheduled constraint check actually repairs the
/// state. Below it a repair would only exchange truncation error for rounding
/// noise in the first integrals.
pub const REPAIR_TOL: f64 = 1e-12;
const CUSTOM_FD_STEP: f64 = 1e-5;
const CUSTOM_FD_TOL: f64 = 1e-6;

/// Principal moments of inertia.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaTensor {
    i: [f64; 3],
}

impl InertiaTensor {
    pub fn new(i1: f64, i2: f64, i3: f64) -> Result<Self> {
        let i = [i1, i2, i3];
        if i.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInertia(format!("moments must be positive, got {i:?}")));
        }
        Ok(Self { i })
    }

    pub fn moments(&self) -> [f64; 3] {
        self.i
    }

    pub fn diagonal(&self) -> Vec3 {
        Vec3::from(self.i)
    }

    /// `I_i + I_j > I_k` for every permutation.
    pub fn strict_triangle(&self) -> bool {
        let [a, b, c] = self.i;
        a + b > c && b + c > a && c + a > b
    }

    pub fn apply(&self, w: &Vec3) -> Vec3 {
        w.component_mul(&self.diagonal())
    }

    pub fn apply_inverse(&self, w: &Vec3) -> Vec3 {
        w.component_div(&self.diagonal())
    }

    /// `<v, v>` of the vertical generator at a configuration with Poisson
    /// vector `nu`: `I1 a1^2 + I2 a2^2 + I3 a3^2`.
    pub fn vertical_norm_sq(&self, nu: &Vec3) -> f64 {
        self.apply(nu).dot(nu)
    }
}

type PotentialFn = dyn Fn(&Vec3) -> (f64, Vec3) + Send + Sync;

/// A user-supplied potential on the sphere, checked against central
/// differences of its own value when constructed.
#[derive(Clone)]
pub struct CustomPotential {
    f: Arc<PotentialFn>,
}

impl fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomPotential")
    }
}

impl CustomPotential {
    pub fn eval(&self, nu: &Vec3) -> (f64, Vec3) {
        (self.f)(nu)
    }
}

/// Potential energy as a function of the Poisson vector.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    Zero,
    /// `V = c . nu`
    Linear(Vec3),
    /// `V = nu^T B nu / 2`, `B` symmetric.
    Quadratic(Mat3),
    Custom(CustomPotential),
}

fn validation_points() -> Vec<Vec3> {
    let mut pts = Vec::new();
    for i in 0..3 {
        for s in [1.0, -1.0] {
            let mut v = Vec3::zeros();
            v[i] = s;
            pts.push(v);
        }
    }
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                pts.push(Vec3::new(sx, sy, sz).normalize());
            }
        }
    }
    pts.push(Vec3::new(0.3, -0.5, 0.81).normalize());
    pts
}

impl PotentialSpec {
    pub fn linear(c: Vec3) -> Self {
        Self::Linear(c)
    }

    pub fn quadratic(b: Mat3) -> Result<Self> {
        let s = Self::Quadratic(b);
        s.validate()?;
        Ok(s)
    }

    /// Wraps `f(nu) -> (V, grad V)`. The gradient is compared to central
    /// differences (step 1e-5, tolerance 1e-6) at a fixed set of points.
    pub fn custom<F>(f: F) -> Result<Self>
    where
        F: Fn(&Vec3) -> (f64, Vec3) + Send + Sync + 'static,
    {
        for p in validation_points() {
            let (_, grad) = f(&p);
            for i in 0..3 {
                let mut fwd = p;
                let mut bwd = p;
                fwd[i] += CUSTOM_FD_STEP;
                bwd[i] -= CUSTOM_FD_STEP;
                let fd = (f(&fwd).0 - f(&bwd).0) / (2.0 * CUSTOM_FD_STEP);
                let err = (fd - grad[i]).abs();
                if !(err <= CUSTOM_FD_TOL * (1.0 + fd.abs())) {
                    return Err(Error::InvalidPotential(format!(
                        "gradient component {i} at {p:?} differs from central difference by {err:e}"
                    )));
                }
            }
        }
        Ok(Self::Custom(CustomPotential { f: Arc::new(f) }))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Quadratic(b) => {
                let asym = (b - b.transpose()).amax();
                if asym > 1e-12 {
                    return Err(Error::InvalidPotential(format!("quadratic form is not symmetric ({asym:e})")));
                }
                Ok(())
            }
            Self::Linear(c) if !c.iter().all(|x| x.is_finite()) => {
                Err(Error::InvalidPotential("non-finite coefficients".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, nu: &Vec3) -> f64 {
        self.eval(nu).0
    }

    /// Value and gradient of the extension to R^3.
    pub fn eval(&self, nu: &Vec3) -> (f64, Vec3) {
        match self {
            Self::Zero => (0.0, Vec3::zeros()),
            Self::Linear(c) => (c.dot(nu), *c),
            Self::Quadratic(b) => {
                let g = b * nu;
                (0.5 * nu.dot(&g), g)
            }
            Self::Custom(p) => p.eval(nu),
        }
    }
}

/// Poisson vector and angular velocity in the body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyPhaseState {
    pub nu: Vec3,
    pub omega: Vec3,
}

impl BodyPhaseState {
    pub fn new(nu: Vec3, omega: Vec3) -> Result<Self> {
        check_unit(&nu)?;
        Ok(Self { nu, omega })
    }
}

/// Configuration on SO(3) and angular velocity in the body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState {
    pub q: Rotation,
    pub omega: Vec3,
}

impl FullState {
    pub fn new(q: Rotation, omega: Vec3) -> Self {
        Self { q, omega }
    }

    pub fn phase(&self) -> BodyPhaseState {
        BodyPhaseState { nu: poisson_projection(&self.q), omega: self.omega }
    }
}

pub fn kinetic_energy(omega: &Vec3, inertia: &InertiaTensor) -> f64 {
    0.5 * inertia.apply(omega).dot(omega)
}

pub fn total_energy(s: &BodyPhaseState, inertia: &InertiaTensor, potential: &PotentialSpec) -> f64 {
    kinetic_energy(&s.omega, inertia) + potential.value(&s.nu)
}

/// Momentum of the vertical rotations, `I1 a1 w1 + I2 a2 w2 + I3 a3 w3`.
pub fn momentum(s: &BodyPhaseState, inertia: &InertiaTensor) -> f64 {
    inertia.apply(&s.omega).dot(&s.nu)
}

fn omega_dot(nu: &Vec3, omega: &Vec3, inertia: &InertiaTensor, potential: &PotentialSpec) -> Vec3 {
    let (_, grad) = potential.eval(nu);
    let torque = inertia.apply(omega).cross(omega) + nu.cross(&grad);
    inertia.apply_inverse(&torque)
}

/// Euler-Poisson vector field: `(nu', omega')`.
pub fn euler_poisson_rhs(s: &BodyPhaseState, inertia: &InertiaTensor, potential: &PotentialSpec) -> (Vec3, Vec3) {
    (s.nu.cross(&s.omega), omega_dot(&s.nu, &s.omega, inertia, potential))
}

/// Vector field on `SO(3) x R^3`: `(Q hat(omega), omega')`.
pub fn full_rhs(s: &FullState, inertia: &InertiaTensor, potential: &PotentialSpec) -> (Mat3, Vec3) {
    let nu = poisson_projection(&s.q);
    (s.q.matrix() * hat(&s.omega), omega_dot(&nu, &s.omega, inertia, potential))
}

/// Initial data for [`simulate_body`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BodyInitial {
    /// Integrate the Euler-Poisson equations on `(nu, omega)`.
    Poisson(BodyPhaseState),
    /// Integrate the lifted system on `(Q, omega)`.
    Full(FullState),
}

/// One stored point of a rigid-body trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct BodySample {
    pub t: f64,
    pub nu: Vec3,
    pub omega: Vec3,
    /// Present for the full variant.
    pub q: Option<Rotation>,
    pub energy: f64,
    pub momentum: f64,
    /// `| |nu| - 1 |`, measured before any constraint repair at this step.
    pub unit_residual: f64,
    /// `|Q^T Q - Id|_inf` before repair (full variant only).
    pub ortho_residual: Option<f64>,
}

/// Time-ordered samples of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub samples: Vec<S>,
    /// Number of constraint repairs (renormalizations or chart switches).
    pub repairs: usize,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

impl Trajectory<BodySample> {
    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        let scale = if e0.abs() > 0.0 { e0.abs() } else { 1.0 };
        self.samples.iter().map(|s| (s.energy - e0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn max_momentum_drift(&self) -> f64 {
        let j0 = self.samples[0].momentum;
        self.samples.iter().map(|s| (s.momentum - j0).abs()).fold(0.0, f64::max)
    }
}

fn pack_full(q: &Mat3, omega: &Vec3) -> Vec<f64> {
    let mut y = Vec::with_capacity(12);
    for r in 0..3 {
        for c in 0..3 {
            y.push(q[(r, c)]);
        }
    }
    y.extend_from_slice(omega.as_slice());
    y
}

fn unpack_full(y: &[f64]) -> (Mat3, Vec3) {
    (Mat3::from_row_slice(&y[..9]), Vec3::new(y[9], y[10], y[11]))
}

fn v3(y: &[f64]) -> Vec3 {
    Vec3::new(y[0], y[1], y[2])
}

/// Integrates the rigid body and records energy, momentum and constraint
/// residuals at every accepted step.
///
/// Every `renorm_every` steps the constraint residual is checked; if it exceeds
/// [`REPAIR_TOL`], `nu` is rescaled to unit length (or `Q` replaced by its polar
/// factor). Residuals are recorded before the repair. A residual
/// above [`INVARIANT_HARD_LIMIT`] aborts with [`Error::InvariantBlown`].
pub fn simulate_body(
    initial: &BodyInitial,
    inertia: &InertiaTensor,
    potential: &PotentialSpec,
    settings: &IntegratorSettings,
) -> Result<Trajectory<BodySample>> {
    settings.validate()?;
    potential.validate()?;
    let every = settings.renorm_every;
    let mut pre_repair: Vec<(usize, f64, Option<f64>)> = Vec::new();
    let mut repairs = 0usize;

    let (solution, full): (Solution, bool) = match initial {
        BodyInitial::Poisson(s) => {
            check_unit(&s.nu)?;
            let y0 = [s.nu.x, s.nu.y, s.nu.z, s.omega.x, s.omega.y, s.omega.z];
            let rhs = |_t: f64, y: &[f64], d: &mut [f64]| {
                let state = BodyPhaseState { nu: v3(y), omega: v3(&y[3..]) };
                let (nd, wd) = euler_poisson_rhs(&state, inertia, potential);
                d[..3].copy_from_slice(nd.as_slice());
                d[3..].copy_from_slice(wd.as_slice());
                Ok(())
            };
            let mut hook = |step: usize, t: f64, y: &mut [f64]| {
                let n = v3(y).norm();
                let residual = (n - 1.0).abs();
                if !(residual <= INVARIANT_HARD_LIMIT) {
                    return Err(Error::InvariantBlown { t, residual });
                }
                if step.is_multiple_of(every) && residual > REPAIR_TOL {
                    pre_repair.push((step, residual, None));
                    for x in &mut y[..3] {
                        *x /= n;
                    }
                    repairs += 1;
                }
                Ok(())
            };
            let hooks: &mut [&mut dyn StepHook] = &mut [&mut hook];
            (integrate(rhs, &y0, settings, hooks)?, false)
        }
        BodyInitial::Full(s) => {
            let y0 = pack_full(s.q.matrix(), &s.omega);
            let rhs = |_t: f64, y: &[f64], d: &mut [f64]| {
                let (q, omega) = unpack_full(y);
                let state = FullState { q: Rotation::from_matrix_unchecked(q), omega };
                let (qd, wd) = full_rhs(&state, inertia, potential);
                d.copy_from_slice(&pack_full(&qd, &wd));
                Ok(())
            };
            let mut hook = |step: usize, t: f64, y: &mut [f64]| {
                let (q, omega) = unpack_full(y);
                let ortho = crate::so3::ortho_residual(&q);
                let unit = (v3(y).norm() - 1.0).abs();
                let worst = ortho.max(unit);
                if !(worst <= INVARIANT_HARD_LIMIT) {
                    return Err(Error::InvariantBlown { t, residual: worst });
                }
                if step.is_multiple_of(every) && worst > REPAIR_TOL {
                    pre_repair.push((step, unit, Some(ortho)));
                    let r = reorthonormalize(&q)?;
                    y.copy_from_slice(&pack_full(r.matrix(), &omega));
                    repairs += 1;
                }
                Ok(())
            };
            let hooks: &mut [&mut dyn StepHook] = &mut [&mut hook];
            (integrate(rhs, &y0, settings, hooks)?, true)
        }
    };

    debug!("simulate_body: {} steps, {} constraint repairs", solution.records.len() - 1, repairs);
    let mut repaired = pre_repair.into_iter().peekable();
    let mut samples = Vec::with_capacity(solution.records.len());
    for (idx, rec) in solution.accepted().enumerate() {
        let (nu, omega, q) = if full {
            let (q, omega) = unpack_full(&rec.state);
            let rot = Rotation::from_matrix_unchecked(q);
            (poisson_projection(&rot), omega, Some(rot))
        } else {
            (v3(&rec.state), v3(&rec.state[3..]), None)
        };
        let phase = BodyPhaseState { nu, omega };
        let mut unit_residual = (nu.norm() - 1.0).abs();
        let mut ortho_residual = q.map(|r| r.ortho_residual());
        if let Some(&(step, unit, ortho)) = repaired.peek() {
            if step == idx {
                unit_residual = unit;
                ortho_residual = ortho;
                repaired.next();
            }
        }
        samples.push(BodySample {
            t: rec.t,
            nu,
            omega,
            q,
            energy: total_energy(&phase, inertia, potential),
            momentum: momentum(&phase, inertia),
            unit_residual,
            ortho_residual,
        });
    }
    if !inertia.strict_triangle() {
        warn!("inertia {:?} violates the strict triangle inequalities", inertia.moments());
    }
    Ok(Trajectory { samples, repairs })
}

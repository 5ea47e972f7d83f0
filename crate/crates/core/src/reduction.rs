//! Reduction of the rigid body by the rotations about the vertical.
//!
//! The quotient of SO(3) by the symmetry group is the Poisson sphere. Writing
//! `D(nu) = I1 a1^2 + I2 a2^2 + I3 a3^2 = <v, v>` for the squared length of the
//! vertical generator, the reduced system on the sphere is the gyroscopic
//! system with
//!
//! * metric `m~(nudot, nudot) = I1 I2 I3 (nudot1^2/I1 + nudot2^2/I2 + nudot3^2/I3) / D`,
//! * amended potential `V_k = V + k^2 / (2 D)`,
//! * gyroscopic form `k * C(nu) * (a1 da2^da3 + a2 da3^da1 + a3 da1^da2)` with
//!   `C = [(I2+I3-I1) I1 a1^2 + (I3+I1-I2) I2 a2^2 + (I1+I2-I3) I3 a3^2] / D^2`.
//!
//! The last factor is the area form of the unit sphere with the outward
//! orientation. `C` is positive whenever the moments satisfy the strict
//! triangle inequalities.

use crate::body::{InertiaTensor, PotentialSpec};
use crate::error::{Error, Result};
use crate::so3::{check_unit, Vec3};

/// Tolerance on `|nu . nudot|` for a velocity to count as tangent.
pub const TANGENCY_TOL: f64 = 1e-10;
/// Tangency defects up to this size are projected away instead of rejected.
pub const TANGENCY_REPAIR_LIMIT: f64 = 1e-6;

/// A point of the Poisson sphere together with a tangent velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    nu: Vec3,
    nudot: Vec3,
}

impl ReducedState {
    /// Validates `|nu| = 1` and `nu . nudot = 0`. A small tangency defect
    /// (below [`TANGENCY_REPAIR_LIMIT`]) is removed by projection.
    pub fn new(nu: Vec3, nudot: Vec3) -> Result<Self> {
        check_unit(&nu).map_err(|e| Error::ConstraintViolated(e.to_string()))?;
        let defect = nu.dot(&nudot);
        if defect.abs() <= TANGENCY_TOL {
            return Ok(Self { nu, nudot });
        }
        if defect.abs() <= TANGENCY_REPAIR_LIMIT {
            return Ok(Self { nu, nudot: nudot - nu * (defect / nu.norm_squared()) });
        }
        Err(Error::ConstraintViolated(format!("nu . nudot = {defect:e}")))
    }

    pub fn nu(&self) -> Vec3 {
        self.nu
    }

    pub fn nudot(&self) -> Vec3 {
        self.nudot
    }
}

/// Data of the reduced gyroscopic system at momentum `k`.
#[derive(Debug, Clone)]
pub struct ReducedSystemSpec {
    pub inertia: InertiaTensor,
    pub potential: PotentialSpec,
    pub k: f64,
}

impl ReducedSystemSpec {
    pub fn new(inertia: InertiaTensor, potential: PotentialSpec, k: f64) -> Self {
        Self { inertia, potential, k }
    }
}

fn check_tangent(v: &Vec3, nu: &Vec3) -> Result<()> {
    let defect = nu.dot(v);
    if defect.abs() > TANGENCY_TOL * v.norm().max(1.0) {
        return Err(Error::ConstraintViolated(format!("vector not tangent: nu . v = {defect:e}")));
    }
    Ok(())
}

/// Angular velocity of the horizontal (zero-momentum) motion covering `nudot`:
/// `omega0 = (nudot x I nu) / (I nu . nu)`, component by component.
pub fn horizontal_lift(s: &ReducedState, inertia: &InertiaTensor) -> Vec3 {
    horizontal_lift_raw(&s.nu, &s.nudot, inertia)
}

pub(crate) fn horizontal_lift_raw(nu: &Vec3, nudot: &Vec3, inertia: &InertiaTensor) -> Vec3 {
    let [i1, i2, i3] = inertia.moments();
    let (a, d) = (nu, nudot);
    let den = inertia.vertical_norm_sq(nu);
    Vec3::new(
        (i3 * a.z * d.y - i2 * a.y * d.z) / den,
        (i1 * a.x * d.z - i3 * a.z * d.x) / den,
        (i2 * a.y * d.x - i1 * a.x * d.y) / den,
    )
}

/// Polarized reduced metric `m~(u, w)` at `nu`.
pub fn reduced_metric(u: &Vec3, w: &Vec3, nu: &Vec3, inertia: &InertiaTensor) -> Result<f64> {
    check_unit(nu)?;
    check_tangent(u, nu)?;
    check_tangent(w, nu)?;
    Ok(reduced_metric_raw(u, w, nu, inertia))
}

pub(crate) fn reduced_metric_raw(u: &Vec3, w: &Vec3, nu: &Vec3, inertia: &InertiaTensor) -> f64 {
    let [i1, i2, i3] = inertia.moments();
    let weighted = u.x * w.x / i1 + u.y * w.y / i2 + u.z * w.z / i3;
    i1 * i2 * i3 * weighted / inertia.vertical_norm_sq(nu)
}

/// Connection form evaluated on a velocity with spin `omega` at a
/// configuration over `nu`: `(I omega . nu) / (I nu . nu)`.
pub fn connection_value(nu: &Vec3, omega: &Vec3, inertia: &InertiaTensor) -> Result<f64> {
    check_unit(nu)?;
    Ok(inertia.apply(omega).dot(nu) / inertia.vertical_norm_sq(nu))
}

/// Density of the reduced curvature form (per unit `k`) against the outward
/// area form of the sphere.
pub fn curvature_coefficient(nu: &Vec3, inertia: &InertiaTensor) -> Result<f64> {
    check_unit(nu)?;
    Ok(curvature_coefficient_raw(nu, inertia))
}

pub(crate) fn curvature_coefficient_raw(nu: &Vec3, inertia: &InertiaTensor) -> f64 {
    let [i1, i2, i3] = inertia.moments();
    let (a1, a2, a3) = (nu.x * nu.x, nu.y * nu.y, nu.z * nu.z);
    let num = (i2 + i3 - i1) * i1 * a1 + (i3 + i1 - i2) * i2 * a2 + (i1 + i2 - i3) * i3 * a3;
    let den = inertia.vertical_norm_sq(nu);
    num / (den * den)
}

/// `V(nu) + k^2 / (2 D(nu))`.
pub fn amended_potential(nu: &Vec3, k: f64, inertia: &InertiaTensor, potential: &PotentialSpec) -> Result<f64> {
    check_unit(nu)?;
    Ok(amended_potential_eval(nu, k, inertia, potential).0)
}

/// Value and R^3 gradient of the amended potential (extension off the sphere
/// given by the same formula).
pub(crate) fn amended_potential_eval(
    nu: &Vec3,
    k: f64,
    inertia: &InertiaTensor,
    potential: &PotentialSpec,
) -> (f64, Vec3) {
    let (v, grad) = potential.eval(nu);
    let d = inertia.vertical_norm_sq(nu);
    let value = v + k * k / (2.0 * d);
    let grad = grad - inertia.apply(nu) * (k * k / (d * d));
    (value, grad)
}

/// Angular velocity of the unique motion with momentum `k` covering `nudot`:
/// the horizontal lift plus the vertical vector `k nu / D`.
pub fn reconstruct_velocity(s: &ReducedState, k: f64, inertia: &InertiaTensor) -> Vec3 {
    horizontal_lift(s, inertia) + s.nu * (k / inertia.vertical_norm_sq(&s.nu))
}

/// Midpoint-rule integral over the unit sphere on an `n_lat x n_lon`
/// latitude-longitude grid with the `sin(theta)` area weight.
pub fn sphere_integral<F>(f: F, n_lat: usize, n_lon: usize) -> f64
where
    F: Fn(&Vec3) -> f64,
{
    let d_theta = std::f64::consts::PI / n_lat as f64;
    let d_phi = 2.0 * std::f64::consts::PI / n_lon as f64;
    let mut total = 0.0;
    for i in 0..n_lat {
        let theta = (i as f64 + 0.5) * d_theta;
        let (st, ct) = theta.sin_cos();
        let mut ring = 0.0;
        for j in 0..n_lon {
            let phi = (j as f64 + 0.5) * d_phi;
            let (sp, cp) = phi.sin_cos();
            ring += f(&Vec3::new(st * cp, st * sp, ct));
        }
        total += ring * st;
    }
    total * d_theta * d_phi
}

/// Integral of the reduced curvature form over the sphere on the default
/// 400 x 800 grid.
pub fn total_curvature(inertia: &InertiaTensor) -> f64 {
    sphere_integral(|nu| curvature_coefficient_raw(nu, inertia), 400, 800)
}

//! Two-dimensional mechanical systems with gyroscopic forces in coordinates.
//!
//! A system is a metric `a_ij(q)`, a potential `V(q)` and a gyroscopic 2-form
//! `kappa = c(q) dq1 ^ dq2`. With the antisymmetrized components
//! `kbar_12 = c`, `kbar_21 = -c` the equations of motion read
//!
//! ```text
//! q''^i + G^i_jk q'^j q'^k + a^ij dV/dq^j = a^ik kbar_kj q'^j
//! ```
//!
//! so a positive density turns the motion clockwise in the chart.

mod maupertuis;
mod sphere;

pub use maupertuis::{
    curvature_flow_rhs, integrate_curvature_flow, reparameterize, signed_curvature_at, signed_geodesic_curvature,
    EnergyLevel, MaupertuisMetric, Reparameterized, TimeChange, HV_FLOOR, UNIT_SPEED_TOL,
};
pub use sphere::{
    reduced_system_in_chart, simulate_reduced, Chart, ChartId, ReducedChartSystem, ReducedSample,
    ReducedSimulation, ReducedTrajectory, DEFAULT_SWITCH_RADIUS,
};

use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorSettings, Solution};
use nalgebra::{Matrix2, Vector2};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Christoffel symbols `G[i][j][k] = G^i_jk`.
pub type Christoffel = [[[f64; 2]; 2]; 2];

/// Relative step of the central differences for metric derivatives.
pub const METRIC_FD_STEP: f64 = 1e-5;

/// Coordinate description of a gyroscopic system on a surface.
///
/// Implementations must be pure: the integrator may call them from any thread
/// and in any order.
pub trait GyroSystem2D {
    fn metric(&self, q: &Vec2) -> Mat2;

    /// `[d a / dq1, d a / dq2]` when known in closed form.
    fn metric_gradient(&self, _q: &Vec2) -> Option<[Mat2; 2]> {
        None
    }

    /// Value and gradient of the potential.
    fn potential(&self, q: &Vec2) -> (f64, Vec2);

    /// Density `c(q)` of the gyroscopic form against `dq1 ^ dq2`.
    fn kappa(&self, q: &Vec2) -> f64;
}

impl<S: GyroSystem2D + ?Sized> GyroSystem2D for &S {
    fn metric(&self, q: &Vec2) -> Mat2 {
        (**self).metric(q)
    }
    fn metric_gradient(&self, q: &Vec2) -> Option<[Mat2; 2]> {
        (**self).metric_gradient(q)
    }
    fn potential(&self, q: &Vec2) -> (f64, Vec2) {
        (**self).potential(q)
    }
    fn kappa(&self, q: &Vec2) -> f64 {
        (**self).kappa(q)
    }
}

/// Position and velocity in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartState {
    pub q: Vec2,
    pub qdot: Vec2,
}

impl ChartState {
    pub fn new(q: Vec2, qdot: Vec2) -> Self {
        Self { q, qdot }
    }

    pub(crate) fn to_vec(self) -> [f64; 4] {
        [self.q.x, self.q.y, self.qdot.x, self.qdot.y]
    }

    pub(crate) fn from_slice(y: &[f64]) -> Self {
        Self { q: Vec2::new(y[0], y[1]), qdot: Vec2::new(y[2], y[3]) }
    }
}

pub(crate) fn checked_metric<S: GyroSystem2D + ?Sized>(sys: &S, q: &Vec2) -> Result<Mat2> {
    let a = sys.metric(q);
    let det = a.determinant();
    if !(det > 0.0 && a.trace() > 0.0) {
        return Err(Error::SingularMetric { q0: q.x, q1: q.y });
    }
    Ok(a)
}

/// Metric derivatives, analytic when available, else central differences.
pub fn metric_derivatives<S: GyroSystem2D + ?Sized>(sys: &S, q: &Vec2) -> [Mat2; 2] {
    if let Some(g) = sys.metric_gradient(q) {
        return g;
    }
    let h = METRIC_FD_STEP * (q.norm() + 1.0);
    let mut out = [Mat2::zeros(); 2];
    for (c, slot) in out.iter_mut().enumerate() {
        let mut e = Vec2::zeros();
        e[c] = h;
        *slot = (sys.metric(&(q + e)) - sys.metric(&(q - e))) / (2.0 * h);
    }
    out
}

/// Christoffel symbols of the second kind of the metric at `q`.
pub fn christoffel<S: GyroSystem2D + ?Sized>(sys: &S, q: &Vec2) -> Result<Christoffel> {
    let a = checked_metric(sys, q)?;
    let inv = a.try_inverse().ok_or(Error::SingularMetric { q0: q.x, q1: q.y })?;
    Ok(christoffel_from(&inv, &metric_derivatives(sys, q)))
}

fn christoffel_from(inv: &Mat2, da: &[Mat2; 2]) -> Christoffel {
    let mut g = [[[0.0; 2]; 2]; 2];
    // first kind: G_ljk = (d_j a_lk + d_k a_lj - d_l a_jk) / 2
    let mut first = [[[0.0; 2]; 2]; 2];
    for l in 0..2 {
        for j in 0..2 {
            for k in j..2 {
                first[l][j][k] = 0.5 * (da[j][(l, k)] + da[k][(l, j)] - da[l][(j, k)]);
            }
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            for k in j..2 {
                let v = inv[(i, 0)] * first[0][j][k] + inv[(i, 1)] * first[1][j][k];
                g[i][j][k] = v;
                g[i][k][j] = v;
            }
        }
    }
    g
}

/// `G^i_jk u^j w^k`.
pub fn christoffel_contract(g: &Christoffel, u: &Vec2, w: &Vec2) -> Vec2 {
    let mut out = Vec2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i] += g[i][j][k] * u[j] * w[k];
            }
        }
    }
    out
}

/// Lowered gyroscopic force `kbar_kj q'^j`.
pub(crate) fn gyro_force(c: f64, v: &Vec2) -> Vec2 {
    Vec2::new(c * v.y, -c * v.x)
}

/// Returns `(q', q'')` for the equations of motion.
pub fn gyro_rhs<S: GyroSystem2D + ?Sized>(sys: &S, s: &ChartState) -> Result<(Vec2, Vec2)> {
    let a = checked_metric(sys, &s.q)?;
    let inv = a.try_inverse().ok_or(Error::SingularMetric { q0: s.q.x, q1: s.q.y })?;
    let g = christoffel_from(&inv, &metric_derivatives(sys, &s.q));
    let (_, grad) = sys.potential(&s.q);
    let force = gyro_force(sys.kappa(&s.q), &s.qdot) - grad;
    let acc = inv * force - christoffel_contract(&g, &s.qdot, &s.qdot);
    Ok((s.qdot, acc))
}

/// `a(q', q') / 2`.
pub fn kinetic_energy<S: GyroSystem2D + ?Sized>(sys: &S, s: &ChartState) -> f64 {
    0.5 * s.qdot.dot(&(sys.metric(&s.q) * s.qdot))
}

/// Total energy `a(q', q') / 2 + V(q)`.
pub fn energy<S: GyroSystem2D + ?Sized>(sys: &S, s: &ChartState) -> f64 {
    kinetic_energy(sys, s) + sys.potential(&s.q).0
}

/// Integrates the equations of motion in a single chart.
pub fn integrate_chart<S: GyroSystem2D + ?Sized>(
    sys: &S,
    initial: &ChartState,
    settings: &IntegratorSettings,
) -> Result<Solution> {
    let rhs = |_t: f64, y: &[f64], d: &mut [f64]| {
        let (v, acc) = gyro_rhs(sys, &ChartState::from_slice(y))?;
        d.copy_from_slice(&[v.x, v.y, acc.x, acc.y]);
        Ok(())
    };
    integrate(rhs, &initial.to_vec(), settings, &mut [])
}

/// Flat plane with a constant magnetic density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuclideanPlane {
    pub field: f64,
}

impl GyroSystem2D for EuclideanPlane {
    fn metric(&self, _q: &Vec2) -> Mat2 {
        Mat2::identity()
    }
    fn metric_gradient(&self, _q: &Vec2) -> Option<[Mat2; 2]> {
        Some([Mat2::zeros(); 2])
    }
    fn potential(&self, _q: &Vec2) -> (f64, Vec2) {
        (0.0, Vec2::zeros())
    }
    fn kappa(&self, _q: &Vec2) -> f64 {
        self.field
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Round sphere of radius 1 in a stereographic chart, with a potential and
    /// field to exercise every term.
    struct Stereo {
        field: f64,
        pot: f64,
        analytic: bool,
    }

    impl GyroSystem2D for Stereo {
        fn metric(&self, q: &Vec2) -> Mat2 {
            let s = 1.0 + q.norm_squared();
            Mat2::identity() * (4.0 / (s * s))
        }
        fn metric_gradient(&self, q: &Vec2) -> Option<[Mat2; 2]> {
            let s = 1.0 + q.norm_squared();
            let f = -16.0 / (s * s * s);
            self.analytic.then(|| [Mat2::identity() * (f * q.x), Mat2::identity() * (f * q.y)])
        }
        fn potential(&self, q: &Vec2) -> (f64, Vec2) {
            // height on the sphere
            let s = 1.0 + q.norm_squared();
            let v = self.pot * (1.0 - q.norm_squared()) / s;
            (v, q * (-4.0 * self.pot / (s * s)))
        }
        fn kappa(&self, q: &Vec2) -> f64 {
            let s = 1.0 + q.norm_squared();
            self.field * 4.0 / (s * s)
        }
    }

    #[test]
    fn euclidean_christoffel_vanishes() {
        let g = christoffel(&EuclideanPlane { field: 0.0 }, &Vec2::new(0.3, -2.0)).unwrap();
        assert_eq!(g, [[[0.0; 2]; 2]; 2]);
    }

    #[test]
    fn sphere_christoffel_matches_analytic() {
        let sys = Stereo { field: 0.0, pot: 0.0, analytic: false };
        for q in [Vec2::new(0.3, -0.7), Vec2::new(1.5, 0.2), Vec2::new(-0.1, 0.05)] {
            let g = christoffel(&sys, &q).unwrap();
            let s = 1.0 + q.norm_squared();
            // conformal factor 4/s^2: G^i_jk = -(2/s)(d_ij q_k + d_ik q_j - d_jk q_i)
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        let exact = -2.0 / s * (d(i, j) * q[k] + d(i, k) * q[j] - d(j, k) * q[i]);
                        assert_abs_diff_eq!(g[i][j][k], exact, epsilon = 1e-9);
                        assert_eq!(g[i][j][k], g[i][k][j]);
                    }
                }
            }
            assert_abs_diff_eq!(g[0][0][0], -2.0 * q.x / s, epsilon = 1e-9);
        }
    }

    #[test]
    fn singular_metric_is_rejected() {
        struct Bad;
        impl GyroSystem2D for Bad {
            fn metric(&self, q: &Vec2) -> Mat2 {
                Mat2::new(q.x, 0.0, 0.0, 1.0)
            }
            fn potential(&self, _q: &Vec2) -> (f64, Vec2) {
                (0.0, Vec2::zeros())
            }
            fn kappa(&self, _q: &Vec2) -> f64 {
                0.0
            }
        }
        assert!(matches!(christoffel(&Bad, &Vec2::new(-1.0, 0.0)), Err(Error::SingularMetric { .. })));
        let s = ChartState::new(Vec2::new(0.0, 0.0), Vec2::x());
        assert!(gyro_rhs(&Bad, &s).is_err());
    }

    #[test]
    fn straight_lines_without_forces() {
        let s = ChartState::new(Vec2::new(1.0, 2.0), Vec2::new(0.5, -0.25));
        let sol = integrate_chart(&EuclideanPlane { field: 0.0 }, &s, &IntegratorSettings::rk4(0.01, 3.0)).unwrap();
        let end = sol.last();
        assert_abs_diff_eq!(end.state[0], 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(end.state[1], 1.25, epsilon = 1e-12);
    }

    #[test]
    fn larmor_circles() {
        for b in [2.0f64, -0.5] {
            let speed = 1.5;
            let s = ChartState::new(Vec2::zeros(), Vec2::new(speed, 0.0));
            let period = 2.0 * PI / b.abs();
            let sol = integrate_chart(&EuclideanPlane { field: b }, &s, &IntegratorSettings::rk4(1e-3, period))
                .unwrap();
            // positive field turns clockwise: centre below the start
            let r = speed / b.abs();
            let centre = Vec2::new(0.0, -r * b.signum());
            let worst = sol
                .accepted()
                .map(|rec| ((Vec2::new(rec.state[0], rec.state[1]) - centre).norm() - r).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-6, "radius error {worst}");
            let end = sol.last();
            assert!(Vec2::new(end.state[0], end.state[1]).norm() < 1e-6);
        }
    }

    #[test]
    fn energy_is_first_integral_of_the_field() {
        let sys = Stereo { field: 0.8, pot: 0.6, analytic: true };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let s = ChartState::new(
                Vec2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)),
                Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            );
            let (v, acc) = gyro_rhs(&sys, &s).unwrap();
            // dE/dt = grad_q E . q' + grad_qdot E . q'' with grad_q by differences
            let h = 1e-6;
            let mut dq = 0.0;
            for c in 0..2 {
                let mut e = Vec2::zeros();
                e[c] = h;
                let plus = energy(&sys, &ChartState::new(s.q + e, s.qdot));
                let minus = energy(&sys, &ChartState::new(s.q - e, s.qdot));
                dq += (plus - minus) / (2.0 * h) * v[c];
            }
            let dv = (sys.metric(&s.q) * s.qdot).dot(&acc);
            assert!((dq + dv).abs() < 1e-8, "dE/dt = {}", dq + dv);
        }
    }

    #[test]
    fn energy_drift_converges_at_fourth_order() {
        let sys = Stereo { field: 0.8, pot: 0.6, analytic: true };
        let s = ChartState::new(Vec2::new(0.2, -0.1), Vec2::new(0.9, 0.4));
        let e0 = energy(&sys, &s);
        let drift = |h: f64| {
            let sol = integrate_chart(&sys, &s, &IntegratorSettings::rk4(h, 5.0)).unwrap();
            sol.accepted()
                .map(|r| (energy(&sys, &ChartState::from_slice(&r.state)) - e0).abs())
                .fold(0.0, f64::max)
        };
        let ratio = drift(0.02) / drift(0.01);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn gyroscopic_force_does_no_work() {
        let sys = Stereo { field: 1.7, pot: 0.0, analytic: true };
        let s = ChartState::new(Vec2::new(0.2, -0.1), Vec2::new(0.9, 0.4));
        let t0 = kinetic_energy(&sys, &s);
        let sol = integrate_chart(&sys, &s, &IntegratorSettings::rk4(1e-3, 10.0)).unwrap();
        let worst = sol
            .accepted()
            .map(|r| (kinetic_energy(&sys, &ChartState::from_slice(&r.state)) - t0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "speed drift {worst}");
    }
}

//! Motions at a fixed energy as flows of prescribed curvature.
//!
//! On `M_h = {V < h}` the conformal metric `m_h = 2(h - V) m` turns the
//! energy-`h` motions into curves of geodesic curvature `kappa / o_h`, with
//! `o_h` the area form of `m_h`. Arclength `tau` of `m_h` and time are related
//! by `dt = dtau / (2(h - V))`.

use super::{
    checked_metric, christoffel, christoffel_contract, gyro_rhs, metric_derivatives, ChartState, GyroSystem2D,
    Mat2, Vec2,
};
use crate::error::{Error, Result};
use crate::integrate::{hermite, integrate, IntegratorSettings, Solution, StepRecord};

/// Smallest admissible `h - V` inside the region of motion.
pub const HV_FLOOR: f64 = 1e-6;
/// Tolerance on `|q'|_{m_h} = 1` for arclength states.
pub const UNIT_SPEED_TOL: f64 = 1e-8;
/// Tolerance on the unit speed recovered by finite differences.
const STENCIL_SPEED_TOL: f64 = 1e-6;
const SIMPSON_TOL: f64 = 1e-14;
const SIMPSON_DEPTH: u32 = 30;

/// The energy constant of a family of motions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLevel {
    pub h: f64,
}

impl EnergyLevel {
    pub fn new(h: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::InvalidSettings(format!("energy level {h} is not finite")));
        }
        Ok(Self { h })
    }
}

/// The metric `2(h - V) a` with no potential and the same gyroscopic form.
#[derive(Debug, Clone)]
pub struct MaupertuisMetric<S> {
    pub base: S,
    pub h: f64,
    pub floor: f64,
}

impl<S: GyroSystem2D> MaupertuisMetric<S> {
    pub fn new(base: S, level: EnergyLevel) -> Self {
        Self { base, h: level.h, floor: HV_FLOOR }
    }

    /// `h - V(q)`, or [`Error::TurningRegion`] when it is at or below the floor.
    pub fn margin(&self, q: &Vec2) -> Result<f64> {
        let margin = self.h - self.base.potential(q).0;
        if !(margin > self.floor) {
            return Err(Error::TurningRegion { margin });
        }
        Ok(margin)
    }

    /// `a_h(q)` after checking the turning region.
    pub fn metric_checked(&self, q: &Vec2) -> Result<Mat2> {
        let margin = self.margin(q)?;
        Ok(self.base.metric(q) * (2.0 * margin))
    }

    /// `|q'|` in `m_h`.
    pub fn speed(&self, s: &ChartState) -> Result<f64> {
        Ok(s.qdot.dot(&(self.metric_checked(&s.q)? * s.qdot)).sqrt())
    }

    /// Converts a time-parameterized state to the arclength parameter.
    pub fn to_arclength(&self, s: &ChartState) -> Result<ChartState> {
        Ok(ChartState::new(s.q, s.qdot / (2.0 * self.margin(&s.q)?)))
    }

    /// Converts an arclength state to the time parameter.
    pub fn to_time(&self, s: &ChartState) -> Result<ChartState> {
        Ok(ChartState::new(s.q, s.qdot * (2.0 * self.margin(&s.q)?)))
    }
}

impl<S: GyroSystem2D> GyroSystem2D for MaupertuisMetric<S> {
    fn metric(&self, q: &Vec2) -> Mat2 {
        self.base.metric(q) * (2.0 * (self.h - self.base.potential(q).0))
    }

    fn metric_gradient(&self, q: &Vec2) -> Option<[Mat2; 2]> {
        let a = self.base.metric(q);
        let (v, grad) = self.base.potential(q);
        let da = metric_derivatives(&self.base, q);
        let f = 2.0 * (self.h - v);
        Some([da[0] * f - a * (2.0 * grad.x), da[1] * f - a * (2.0 * grad.y)])
    }

    fn potential(&self, _q: &Vec2) -> (f64, Vec2) {
        (0.0, Vec2::zeros())
    }

    fn kappa(&self, q: &Vec2) -> f64 {
        self.base.kappa(q)
    }
}

/// `(q', q'')` of the flow of curvature `kappa / o_h` in the arclength of `m_h`.
pub fn curvature_flow_rhs<S: GyroSystem2D>(sys: &S, level: EnergyLevel, s: &ChartState) -> Result<(Vec2, Vec2)> {
    let m = MaupertuisMetric::new(sys, level);
    let speed = m.speed(s)?;
    if (speed - 1.0).abs() > UNIT_SPEED_TOL {
        return Err(Error::NotUnitSpeed { speed });
    }
    gyro_rhs(&m, s)
}

/// Integrates the curvature flow in `tau` from a unit-speed arclength state.
pub fn integrate_curvature_flow<S: GyroSystem2D>(
    sys: &S,
    level: EnergyLevel,
    initial: &ChartState,
    settings: &IntegratorSettings,
) -> Result<Solution> {
    curvature_flow_rhs(sys, level, initial)?;
    let m = MaupertuisMetric::new(sys, level);
    let rhs = |_t: f64, y: &[f64], d: &mut [f64]| {
        let s = ChartState::from_slice(y);
        m.margin(&s.q)?;
        let (v, acc) = gyro_rhs(&m, &s)?;
        d.copy_from_slice(&[v.x, v.y, acc.x, acc.y]);
        Ok(())
    };
    integrate(rhs, &initial.to_vec(), settings, &mut [])
}

/// Direction of a change of parameter along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeChange {
    /// From `m_h`-arclength `tau` to time `t`: `dt/dtau = 1 / (2(h - V))`.
    ArclengthToTime,
    /// From time to arclength: `dtau/dt = 2(h - V)`.
    TimeToArclength,
}

/// A chart trajectory re-expressed in the other parameter.
#[derive(Debug)]
pub struct Reparameterized<'a, S> {
    metric: MaupertuisMetric<&'a S>,
    direction: TimeChange,
    records: Vec<StepRecord>,
    /// Target parameter at each record.
    knots: Vec<f64>,
}

fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (fa, fb) = (f(a)?, f(b)?);
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, SIMPSON_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Re-expresses an integrated chart trajectory (state `[q1, q2, v1, v2]`) in
/// the other parameter of the energy level `level`.
pub fn reparameterize<'a, S: GyroSystem2D>(
    solution: &Solution,
    sys: &'a S,
    level: EnergyLevel,
    direction: TimeChange,
) -> Result<Reparameterized<'a, S>> {
    let records: Vec<StepRecord> = solution.accepted().cloned().collect();
    if records.is_empty() {
        return Err(Error::InvalidSettings("empty trajectory".into()));
    }
    let mut out = Reparameterized { metric: MaupertuisMetric::new(sys, level), direction, records, knots: vec![0.0] };
    for r in &out.records {
        out.metric.margin(&Vec2::new(r.state[0], r.state[1]))?;
    }
    for i in 1..out.records.len() {
        let piece = out.integral(i - 1, out.records[i].t)?;
        let prev = out.knots[i - 1];
        out.knots.push(prev + piece);
    }
    Ok(out)
}

impl<'a, S: GyroSystem2D> Reparameterized<'a, S> {
    fn rate_at(&self, q: &Vec2) -> Result<f64> {
        let margin = self.metric.margin(q)?;
        Ok(match self.direction {
            TimeChange::ArclengthToTime => 1.0 / (2.0 * margin),
            TimeChange::TimeToArclength => 2.0 * margin,
        })
    }

    fn source_state(&self, idx: usize, s: f64) -> Vec<f64> {
        let (a, b) = (&self.records[idx], &self.records[idx + 1]);
        if s == a.t {
            a.state.clone()
        } else if s == b.t {
            b.state.clone()
        } else {
            hermite(a, b, s)
        }
    }

    fn rate(&self, idx: usize, s: f64) -> Result<f64> {
        let y = self.source_state(idx, s);
        self.rate_at(&Vec2::new(y[0], y[1]))
    }

    /// Integral of the rate from record `idx` to `s` inside the same step.
    fn integral(&self, idx: usize, s: f64) -> Result<f64> {
        let a = self.records[idx].t;
        if s == a {
            return Ok(0.0);
        }
        adaptive_simpson(&|x| self.rate(idx, x), a, s, SIMPSON_TOL)
    }

    fn interval_of_source(&self, s: f64) -> Result<usize> {
        let (start, end) = (self.records[0].t, self.source_end());
        if !(s >= start && s <= end) {
            return Err(Error::OutOfRange { t: s, start, end });
        }
        let idx = self.records.partition_point(|r| r.t <= s);
        Ok(idx.saturating_sub(1).min(self.records.len().saturating_sub(2)))
    }

    pub fn source_end(&self) -> f64 {
        self.records.last().map(|r| r.t).unwrap_or(0.0)
    }

    pub fn target_end(&self) -> f64 {
        *self.knots.last().unwrap_or(&0.0)
    }

    pub fn direction(&self) -> TimeChange {
        self.direction
    }

    /// Target parameter reached at source parameter `s`.
    pub fn target_of_source(&self, s: f64) -> Result<f64> {
        if self.records.len() == 1 {
            return Ok(0.0);
        }
        let idx = self.interval_of_source(s)?;
        Ok(self.knots[idx] + self.integral(idx, s)?)
    }

    /// Inverse of [`Self::target_of_source`], by safeguarded Newton iteration.
    pub fn source_of_target(&self, target: f64) -> Result<f64> {
        let end = self.target_end();
        if !(target >= 0.0 && target <= end) {
            return Err(Error::OutOfRange { t: target, start: 0.0, end });
        }
        if self.records.len() == 1 {
            return Ok(self.records[0].t);
        }
        let idx = self.knots.partition_point(|&k| k <= target).saturating_sub(1).min(self.records.len() - 2);
        let (mut lo, mut hi) = (self.records[idx].t, self.records[idx + 1].t);
        let offset = target - self.knots[idx];
        let mut s = lo + (hi - lo) * offset / (self.knots[idx + 1] - self.knots[idx]).max(f64::MIN_POSITIVE);
        for _ in 0..60 {
            let f = self.integral(idx, s)? - offset;
            if f.abs() <= 1e-15 * (1.0 + target.abs()) {
                break;
            }
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let newton = s - f / self.rate(idx, s)?;
            s = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        Ok(s)
    }

    /// Chart state at target parameter `target`, with the velocity expressed
    /// against the target parameter.
    pub fn state_at_target(&self, target: f64) -> Result<ChartState> {
        let s = self.source_of_target(target)?;
        let y = if self.records.len() == 1 {
            self.records[0].state.clone()
        } else {
            self.source_state(self.interval_of_source(s)?, s)
        };
        let q = Vec2::new(y[0], y[1]);
        Ok(ChartState::new(q, Vec2::new(y[2], y[3]) / self.rate_at(&q)?))
    }
}

/// Signed geodesic curvature of a curve sampled at equal parameter spacing
/// `dtau`, measured in the metric of `metric`.
///
/// The result holds one value per interior sample `2..n-2`. It is positive
/// when the pair (curvature vector, tangent vector) is positively oriented in
/// the chart times `orientation`.
pub fn signed_geodesic_curvature<M: GyroSystem2D>(
    samples: &[Vec2],
    dtau: f64,
    metric: &M,
    orientation: f64,
) -> Result<Vec<f64>> {
    if samples.len() < 5 || !(dtau > 0.0) {
        return Err(Error::InvalidSettings("need at least 5 samples and a positive spacing".into()));
    }
    let orientation = check_orientation(orientation)?;
    let mut out = Vec::with_capacity(samples.len() - 4);
    for i in 2..samples.len() - 2 {
        let (m2, m1, c, p1, p2) = (samples[i - 2], samples[i - 1], samples[i], samples[i + 1], samples[i + 2]);
        let v = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * dtau);
        let acc = (-m2 + m1 * 16.0 - c * 30.0 + p1 * 16.0 - p2) / (12.0 * dtau * dtau);
        let a = checked_metric(metric, &c)?;
        let speed = v.dot(&(a * v)).sqrt();
        if (speed - 1.0).abs() > STENCIL_SPEED_TOL {
            return Err(Error::NotUnitSpeed { speed });
        }
        out.push(orientation * curvature_from(metric, &c, &a, &v, &acc)?);
    }
    Ok(out)
}

/// Signed geodesic curvature of a curve through `q` with velocity `v` and
/// acceleration `acc` in any parameter.
pub fn signed_curvature_at<M: GyroSystem2D>(metric: &M, q: &Vec2, v: &Vec2, acc: &Vec2, orientation: f64) -> Result<f64> {
    let orientation = check_orientation(orientation)?;
    let a = checked_metric(metric, q)?;
    Ok(orientation * curvature_from(metric, q, &a, v, acc)?)
}

fn check_orientation(o: f64) -> Result<f64> {
    if o == 1.0 || o == -1.0 {
        Ok(o)
    } else {
        Err(Error::InvalidSettings(format!("orientation must be +1 or -1, got {o}")))
    }
}

fn curvature_from<M: GyroSystem2D>(metric: &M, q: &Vec2, a: &Mat2, v: &Vec2, acc: &Vec2) -> Result<f64> {
    let g = christoffel(metric, q)?;
    let w = acc + christoffel_contract(&g, v, v);
    let speed = v.dot(&(a * v)).sqrt();
    Ok(a.determinant().sqrt() * (w.x * v.y - w.y * v.x) / (speed * speed * speed))
}

#[cfg(test)]
mod tests {
    use super::super::{integrate_chart, EuclideanPlane};
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Flat plane with a quadratic well and a field.
    struct Well {
        field: f64,
        stiffness: f64,
    }

    impl GyroSystem2D for Well {
        fn metric(&self, _q: &Vec2) -> Mat2 {
            Mat2::identity()
        }
        fn potential(&self, q: &Vec2) -> (f64, Vec2) {
            (0.5 * self.stiffness * q.norm_squared(), q * self.stiffness)
        }
        fn kappa(&self, q: &Vec2) -> f64 {
            self.field * (1.0 + 0.3 * q.x)
        }
    }

    struct Flat(f64);

    impl GyroSystem2D for Flat {
        fn metric(&self, _q: &Vec2) -> Mat2 {
            Mat2::identity()
        }
        fn potential(&self, _q: &Vec2) -> (f64, Vec2) {
            (self.0, Vec2::zeros())
        }
        fn kappa(&self, _q: &Vec2) -> f64 {
            0.0
        }
    }

    #[test]
    fn maupertuis_metric_examples() {
        let level = EnergyLevel::new(0.5).unwrap();
        let m = MaupertuisMetric::new(EuclideanPlane { field: 0.0 }, level);
        assert_eq!(m.metric_checked(&Vec2::new(1.0, 2.0)).unwrap(), Mat2::identity());
        let m = MaupertuisMetric::new(Flat(0.5), level);
        assert!(matches!(m.metric_checked(&Vec2::zeros()), Err(Error::TurningRegion { .. })));
    }

    #[test]
    fn maupertuis_metric_positive_below_level() {
        let sys = Well { field: 0.0, stiffness: 1.0 };
        let m = MaupertuisMetric::new(&sys, EnergyLevel::new(2.1).unwrap());
        for i in 0..40 {
            for j in 0..40 {
                let q = Vec2::new(-2.0 + 0.1 * i as f64, -2.0 + 0.1 * j as f64);
                if q.norm_squared() < 4.0 {
                    let a = m.metric_checked(&q).unwrap();
                    assert!(a.determinant() > 0.0 && a.trace() > 0.0);
                }
            }
        }
    }

    #[test]
    fn product_rule_gradient_matches_differences() {
        struct NoGrad<'a>(&'a MaupertuisMetric<Well>);
        impl GyroSystem2D for NoGrad<'_> {
            fn metric(&self, q: &Vec2) -> Mat2 {
                self.0.metric(q)
            }
            fn potential(&self, _q: &Vec2) -> (f64, Vec2) {
                (0.0, Vec2::zeros())
            }
            fn kappa(&self, _q: &Vec2) -> f64 {
                0.0
            }
        }
        let m = MaupertuisMetric::new(Well { field: 0.0, stiffness: 1.3 }, EnergyLevel::new(3.0).unwrap());
        let q = Vec2::new(0.4, -0.7);
        let exact = m.metric_gradient(&q).unwrap();
        let fd = metric_derivatives(&NoGrad(&m), &q);
        for c in 0..2 {
            assert!((exact[c] - fd[c]).amax() < 1e-9);
        }
    }

    #[test]
    fn flow_requires_unit_speed() {
        let sys = EuclideanPlane { field: 1.0 };
        let level = EnergyLevel::new(0.5).unwrap();
        let bad = ChartState::new(Vec2::zeros(), Vec2::new(1.1, 0.0));
        assert!(matches!(curvature_flow_rhs(&sys, level, &bad), Err(Error::NotUnitSpeed { .. })));
        let ok = ChartState::new(Vec2::zeros(), Vec2::new(0.6, 0.8));
        assert!(curvature_flow_rhs(&sys, level, &ok).is_ok());
    }

    #[test]
    fn larmor_curvature_and_unit_speed() {
        let b = 1.7;
        let sys = EuclideanPlane { field: b };
        let level = EnergyLevel::new(0.5).unwrap();
        let s = ChartState::new(Vec2::zeros(), Vec2::new(0.6, 0.8));
        let sol = integrate_curvature_flow(&sys, level, &s, &IntegratorSettings::rk4(1e-3, 10.0)).unwrap();
        let m = MaupertuisMetric::new(&sys, level);
        let mut worst = 0.0f64;
        for r in sol.accepted() {
            let st = ChartState::from_slice(&r.state);
            worst = worst.max((m.speed(&st).unwrap() - 1.0).abs());
            let acc = Vec2::new(r.derivative[2], r.derivative[3]);
            let k = signed_curvature_at(&m, &st.q, &st.qdot, &acc, 1.0).unwrap();
            assert_abs_diff_eq!(k, b, epsilon = 1e-12);
        }
        assert!(worst < 1e-9, "unit speed residual {worst}");
    }

    #[test]
    fn time_change_is_identity_or_rescale() {
        let sys = EuclideanPlane { field: 0.4 };
        let level = EnergyLevel::new(0.5).unwrap();
        let s = ChartState::new(Vec2::zeros(), Vec2::new(1.0, 0.0));
        let sol = integrate_curvature_flow(&sys, level, &s, &IntegratorSettings::rk4(0.01, 2.0)).unwrap();
        let rep = reparameterize(&sol, &sys, level, TimeChange::ArclengthToTime).unwrap();
        for tau in [0.0, 0.37, 1.0, 2.0] {
            assert_abs_diff_eq!(rep.target_of_source(tau).unwrap(), tau, epsilon = 1e-14);
        }

        let flat = Flat(0.2);
        let level = EnergyLevel::new(1.2).unwrap();
        // m_h = 2 Id, so the unit arclength velocity has Euclidean length 1/sqrt(2)
        let s = ChartState::new(Vec2::zeros(), Vec2::new(0.5f64.sqrt(), 0.0));
        let sol = integrate_curvature_flow(&flat, level, &s, &IntegratorSettings::rk4(0.01, 2.0)).unwrap();
        let rep = reparameterize(&sol, &flat, level, TimeChange::ArclengthToTime).unwrap();
        assert_abs_diff_eq!(rep.target_end(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rep.source_of_target(0.5).unwrap(), 1.0, epsilon = 1e-12);
        let st = rep.state_at_target(0.25).unwrap();
        assert_abs_diff_eq!(st.qdot.x, 2.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn round_trip_with_direct_integration() {
        let sys = Well { field: 0.9, stiffness: 0.3 };
        let start = ChartState::new(Vec2::new(0.3, 0.1), Vec2::new(0.4, 0.9));
        let level = EnergyLevel::new(super::super::energy(&sys, &start)).unwrap();
        let m = MaupertuisMetric::new(&sys, level);
        let direct = integrate_chart(&sys, &start, &IntegratorSettings::rk4(1e-3, 5.0)).unwrap();

        // arclength flow mapped back to time
        let tau_start = m.to_arclength(&start).unwrap();
        let flow = integrate_curvature_flow(&sys, level, &tau_start, &IntegratorSettings::rk4(1e-3, 4.0)).unwrap();
        let to_time = reparameterize(&flow, &sys, level, TimeChange::ArclengthToTime).unwrap();
        assert!(to_time.target_end() > 5.0);
        let mut worst = 0.0f64;
        for r in direct.accepted().step_by(10) {
            let st = to_time.state_at_target(r.t).unwrap();
            worst = worst.max((st.q - Vec2::new(r.state[0], r.state[1])).norm());
            worst = worst.max((st.qdot - Vec2::new(r.state[2], r.state[3])).norm());
        }
        assert!(worst < 1e-7, "tau -> t error {worst}");

        // time solution mapped to arclength against the flow
        let to_tau = reparameterize(&direct, &sys, level, TimeChange::TimeToArclength).unwrap();
        let mut worst = 0.0f64;
        for r in flow.accepted().step_by(10).take_while(|r| r.t <= to_tau.target_end()) {
            let st = to_tau.state_at_target(r.t).unwrap();
            worst = worst.max((st.q - Vec2::new(r.state[0], r.state[1])).norm());
        }
        assert!(worst < 1e-7, "t -> tau error {worst}");
    }

    #[test]
    fn stencil_curvature_of_circles_and_lines() {
        let r = 2.5;
        let dtau = 1e-2;
        let flat = EuclideanPlane { field: 0.0 };
        // counterclockwise unit-speed circle: (curvature, tangent) is negatively oriented
        let ccw: Vec<Vec2> = (0..200)
            .map(|i| {
                let s = i as f64 * dtau / r;
                Vec2::new(r * s.cos(), r * s.sin())
            })
            .collect();
        for k in signed_geodesic_curvature(&ccw, dtau, &flat, 1.0).unwrap() {
            assert_abs_diff_eq!(k, -1.0 / r, epsilon = 1e-6);
        }
        for k in signed_geodesic_curvature(&ccw, dtau, &flat, -1.0).unwrap() {
            assert_abs_diff_eq!(k, 1.0 / r, epsilon = 1e-6);
        }
        let line: Vec<Vec2> = (0..50).map(|i| Vec2::new(0.6, 0.8) * (i as f64 * dtau)).collect();
        for k in signed_geodesic_curvature(&line, dtau, &flat, 1.0).unwrap() {
            assert!(k.abs() < 5e-4);
        }
        let slow: Vec<Vec2> = (0..50).map(|i| Vec2::new(0.5, 0.0) * (i as f64 * dtau)).collect();
        assert!(matches!(signed_geodesic_curvature(&slow, dtau, &flat, 1.0), Err(Error::NotUnitSpeed { .. })));
    }

    #[test]
    fn geodesics_of_round_sphere_have_zero_curvature() {
        // equator of the unit sphere in the stereographic chart is the unit circle
        struct Round;
        impl GyroSystem2D for Round {
            fn metric(&self, q: &Vec2) -> Mat2 {
                let s = 1.0 + q.norm_squared();
                Mat2::identity() * (4.0 / (s * s))
            }
            fn potential(&self, _q: &Vec2) -> (f64, Vec2) {
                (0.0, Vec2::zeros())
            }
            fn kappa(&self, _q: &Vec2) -> f64 {
                0.0
            }
        }
        let dtau = 1e-2;
        let eq: Vec<Vec2> = (0..100).map(|i| Vec2::new((i as f64 * dtau).cos(), (i as f64 * dtau).sin())).collect();
        for k in signed_geodesic_curvature(&eq, dtau, &Round, 1.0).unwrap() {
            assert!(k.abs() < 5e-4);
        }
    }
}

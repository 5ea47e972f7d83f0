//! Explicit Runge-Kutta engine shared by all simulations.
//!
//! States are flat `f64` slices; callers pack and unpack their own types. Two
//! methods are available: classical fixed-step RK4 and the Fehlberg 4(5) pair
//! with a standard step-size controller. Every accepted step is stored together
//! with the derivative at its end point, which is what [`dense_eval`] uses for
//! cubic Hermite interpolation.
//!
//! Hooks run after each accepted step, in registration order, and may modify
//! the state in place (renormalization, chart switching). The stored record is
//! the post-hook state.

use crate::error::{Error, Result};

pub const MIN_STEP: f64 = 1e-12;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Rkf45,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSettings {
    pub method: Method,
    /// Fixed step for RK4, initial step for RKF45.
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// Steps between constraint repairs; consumed by the simulations, not the engine.
    pub renorm_every: usize,
    pub t_end: f64,
    /// Keep rejected RKF45 attempts in the record list (flagged `accepted = false`).
    pub record_rejected: bool,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            step: 1e-3,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_step: 0.1,
            renorm_every: 16,
            t_end: 10.0,
            record_rejected: false,
        }
    }
}

impl IntegratorSettings {
    pub fn rk4(step: f64, t_end: f64) -> Self {
        Self { method: Method::Rk4, step, t_end, ..Self::default() }
    }

    pub fn rkf45(abs_tol: f64, rel_tol: f64, t_end: f64) -> Self {
        Self { method: Method::Rkf45, abs_tol, rel_tol, t_end, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSettings(msg.to_string()));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive and finite");
        }
        if self.renorm_every == 0 {
            return bad("renorm_every must be at least 1");
        }
        match self.method {
            Method::Rk4 => {
                if !(self.step > 0.0 && self.step.is_finite()) {
                    return bad("rk4 needs a positive step");
                }
            }
            Method::Rkf45 => {
                if !(self.abs_tol > 0.0 || self.rel_tol > 0.0) || self.abs_tol < 0.0 || self.rel_tol < 0.0 {
                    return bad("rkf45 needs nonnegative tolerances, at least one positive");
                }
                if !(self.max_step > 0.0) {
                    return bad("max_step must be positive");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub state: Vec<f64>,
    /// Right-hand side at `(t, state)`.
    pub derivative: Vec<f64>,
    pub accepted: bool,
    /// Scaled local error estimate (RKF45); zero for RK4.
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solution {
    pub records: Vec<StepRecord>,
    pub rejected: usize,
}

impl Solution {
    pub fn accepted(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(|r| r.accepted)
    }

    pub fn last(&self) -> &StepRecord {
        self.records.iter().rev().find(|r| r.accepted).expect("solution has an initial record")
    }

    pub fn dense_eval(&self, t: f64) -> Result<Vec<f64>> {
        dense_eval(&self.records, t)
    }
}

/// Called after every accepted step with the step index (1-based), time and
/// mutable state.
pub trait StepHook {
    fn after_step(&mut self, step: usize, t: f64, state: &mut [f64]) -> Result<()>;
}

impl<F> StepHook for F
where
    F: FnMut(usize, f64, &mut [f64]) -> Result<()>,
{
    fn after_step(&mut self, step: usize, t: f64, state: &mut [f64]) -> Result<()> {
        self(step, t, state)
    }
}

/// Integrates `y' = rhs(t, y)` from `t = 0` to `settings.t_end`.
pub fn integrate<F>(
    mut rhs: F,
    initial: &[f64],
    settings: &IntegratorSettings,
    hooks: &mut [&mut dyn StepHook],
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    settings.validate()?;
    let mut d0 = vec![0.0; initial.len()];
    rhs(0.0, initial, &mut d0)?;
    let first = StepRecord {
        t: 0.0,
        state: initial.to_vec(),
        derivative: d0,
        accepted: true,
        error_estimate: 0.0,
    };
    match settings.method {
        Method::Rk4 => run_rk4(&mut rhs, first, settings, hooks),
        Method::Rkf45 => run_rkf45(&mut rhs, first, settings, hooks),
    }
}

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn run_hooks(hooks: &mut [&mut dyn StepHook], step: usize, t: f64, y: &mut [f64]) -> Result<()> {
    for hook in hooks.iter_mut() {
        hook.after_step(step, t, y)?;
    }
    Ok(())
}

fn run_rk4<F>(
    rhs: &mut F,
    first: StepRecord,
    settings: &IntegratorSettings,
    hooks: &mut [&mut dyn StepHook],
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let h = settings.step;
    let t_end = settings.t_end;
    // the last step absorbs the remainder; drop a sliver that would duplicate t_end
    let n_steps = ((t_end / h) - 1e-9).ceil().max(1.0) as usize;
    let n = first.state.len();

    let mut records = Vec::with_capacity(n_steps + 1);
    records.push(first);
    let (mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut carry = vec![0.0; n];

    for step in 1..=n_steps {
        let prev = records.last().expect("nonempty");
        let t0 = prev.t;
        let t1 = if step == n_steps { t_end } else { step as f64 * h };
        let dt = t1 - t0;
        let (y, k1) = (&prev.state, &prev.derivative);

        axpy(&mut tmp, y, 0.5 * dt, &[(1.0, k1)]);
        rhs(t0 + 0.5 * dt, &tmp, &mut k2)?;
        axpy(&mut tmp, y, 0.5 * dt, &[(1.0, &k2)]);
        rhs(t0 + 0.5 * dt, &tmp, &mut k3)?;
        axpy(&mut tmp, y, dt, &[(1.0, &k3)]);
        rhs(t1, &tmp, &mut k4)?;

        // compensated update: the increment is tiny relative to the state over
        // long runs, so plain summation would dominate the drift budget
        let mut next = vec![0.0; n];
        for i in 0..n {
            let incr = dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) - carry[i];
            let sum = y[i] + incr;
            carry[i] = (sum - y[i]) - incr;
            next[i] = sum;
        }
        let before = next.clone();
        run_hooks(hooks, step, t1, &mut next)?;
        for i in 0..n {
            // small repairs (renormalization) keep the compensation; anything
            // larger is a change of variables and invalidates it
            if (next[i] - before[i]).abs() > 1e-8 * (1.0 + before[i].abs()) {
                carry[i] = 0.0;
            }
        }
        let mut deriv = vec![0.0; n];
        rhs(t1, &next, &mut deriv)?;
        records.push(StepRecord {
            t: t1,
            state: next,
            derivative: deriv,
            accepted: true,
            error_estimate: 0.0,
        });
    }
    Ok(Solution { records, rejected: 0 })
}

// Fehlberg 4(5) tableau.
const C: [f64; 6] = [0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5];
const A: [[f64; 5]; 6] = [
    [0.0; 5],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0];
const B5: [f64; 6] = [16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0];

fn run_rkf45<F>(
    rhs: &mut F,
    first: StepRecord,
    settings: &IntegratorSettings,
    hooks: &mut [&mut dyn StepHook],
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = first.state.len();
    let t_end = settings.t_end;
    let max_step = settings.max_step.min(t_end);
    let mut h = if settings.step > 0.0 { settings.step.min(max_step) } else { 1e-3_f64.min(max_step) };

    let mut records = vec![first];
    let mut rejected = 0usize;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 6];
    let mut tmp = vec![0.0; n];
    let mut y4 = vec![0.0; n];
    let mut step = 0usize;

    loop {
        let prev = records.iter().rev().find(|r| r.accepted).expect("nonempty");
        let t0 = prev.t;
        if t0 >= t_end {
            break;
        }
        let y = prev.state.clone();
        k[0].copy_from_slice(&prev.derivative);
        let mut dt = h.min(t_end - t0);
        // avoid leaving a remainder far below the current step size
        if t_end - (t0 + dt) < MIN_STEP {
            dt = t_end - t0;
        }

        for s in 1..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                tmp[i] = y[i] + dt * acc;
            }
            let (_, rest) = k.split_at_mut(s);
            rhs(t0 + C[s] * dt, &tmp, &mut rest[0])?;
        }

        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut s4 = 0.0;
            let mut s5 = 0.0;
            for s in 0..6 {
                s4 += B4[s] * k[s][i];
                s5 += B5[s] * k[s][i];
            }
            y4[i] = y[i] + dt * s4;
            let scale = settings.abs_tol + settings.rel_tol * y[i].abs().max(y4[i].abs());
            err = err.max((dt * (s5 - s4)).abs() / scale);
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }

        let factor = if err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };

        if err <= 1.0 {
            step += 1;
            let t1 = t0 + dt;
            let mut next = y4.clone();
            run_hooks(hooks, step, t1, &mut next)?;
            let mut deriv = vec![0.0; n];
            rhs(t1, &next, &mut deriv)?;
            records.push(StepRecord {
                t: t1,
                state: next,
                derivative: deriv,
                accepted: true,
                error_estimate: err,
            });
            h = (dt * factor).clamp(MIN_STEP, max_step);
        } else {
            rejected += 1;
            if settings.record_rejected {
                records.push(StepRecord {
                    t: t0 + dt,
                    state: y4.clone(),
                    derivative: vec![f64::NAN; n],
                    accepted: false,
                    error_estimate: err,
                });
            }
            if dt <= MIN_STEP {
                return Err(Error::StepRejected { t: t0 });
            }
            h = (dt * factor).max(MIN_STEP);
        }
    }
    Ok(Solution { records, rejected })
}

/// Cubic Hermite interpolation between the accepted records bracketing `t`.
pub fn dense_eval(records: &[StepRecord], t: f64) -> Result<Vec<f64>> {
    let accepted: Vec<&StepRecord> = records.iter().filter(|r| r.accepted).collect();
    let (start, end) = match (accepted.first(), accepted.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::OutOfRange { t, start: f64::NAN, end: f64::NAN }),
    };
    if !(t >= start && t <= end) {
        return Err(Error::OutOfRange { t, start, end });
    }
    let idx = accepted.partition_point(|r| r.t <= t);
    if idx > 0 && accepted[idx - 1].t == t {
        return Ok(accepted[idx - 1].state.clone());
    }
    let (a, b) = (accepted[idx - 1], accepted[idx]);
    Ok(hermite(a, b, t))
}

pub(crate) fn hermite(a: &StepRecord, b: &StepRecord, t: f64) -> Vec<f64> {
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (0..a.state.len())
        .map(|i| {
            h00 * a.state[i] + h10 * h * a.derivative[i] + h01 * b.state[i] + h11 * h * b.derivative[i]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn exp_rhs(_t: f64, y: &[f64], d: &mut [f64]) -> Result<()> {
        d[0] = y[0];
        Ok(())
    }

    fn oscillator(_t: f64, y: &[f64], d: &mut [f64]) -> Result<()> {
        d[0] = y[1];
        d[1] = -y[0];
        Ok(())
    }

    #[test]
    fn rk4_exponential() {
        let sol = integrate(exp_rhs, &[1.0], &IntegratorSettings::rk4(1e-3, 1.0), &mut []).unwrap();
        let last = sol.last();
        assert_eq!(last.t, 1.0);
        assert!((last.state[0] - E).abs() < 1e-10);
        assert_eq!(sol.records.len(), 1001);
    }

    #[test]
    fn rk4_lands_on_t_end_with_partial_step() {
        let sol = integrate(exp_rhs, &[1.0], &IntegratorSettings::rk4(0.3, 1.0), &mut []).unwrap();
        let ts: Vec<f64> = sol.records.iter().map(|r| r.t).collect();
        assert_eq!(ts.len(), 5);
        assert_eq!(*ts.last().unwrap(), 1.0);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    fn pendulum(_t: f64, y: &[f64], d: &mut [f64]) -> Result<()> {
        d[0] = y[1];
        d[1] = -y[0].sin();
        Ok(())
    }

    fn max_energy_drift<F>(rhs: F, energy: fn(&[f64]) -> f64, y0: &[f64], h: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let sol = integrate(rhs, y0, &IntegratorSettings::rk4(h, 20.0), &mut []).unwrap();
        let e0 = energy(y0);
        sol.records.iter().map(|r| (energy(&r.state) - e0).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rk4_energy_drift_is_fourth_order() {
        let energy = |y: &[f64]| 0.5 * y[1] * y[1] - y[0].cos();
        let y0 = [2.0, 0.0];
        let ratio = max_energy_drift(pendulum, energy, &y0, 0.01) / max_energy_drift(pendulum, energy, &y0, 0.005);
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rk4_linear_oscillator_energy_drift_is_fifth_order() {
        // the stability polynomial gives |R(ih)|^2 = 1 - h^6/72 + ..., one order
        // better than the generic nonlinear case
        let energy = |y: &[f64]| 0.5 * (y[0] * y[0] + y[1] * y[1]);
        let y0 = [1.0, 0.0];
        let ratio = max_energy_drift(oscillator, energy, &y0, 0.02) / max_energy_drift(oscillator, energy, &y0, 0.01);
        assert!((30.0..34.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rk4_global_error_slope() {
        let err = |h: f64| {
            let sol = integrate(exp_rhs, &[1.0], &IntegratorSettings::rk4(h, 1.0), &mut []).unwrap();
            (sol.last().state[0] - E).abs()
        };
        let hs: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
        let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = hs.iter().map(|&h| err(h).ln()).collect();
        let mx = xs.iter().sum::<f64>() / 4.0;
        let my = ys.iter().sum::<f64>() / 4.0;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = num / den;
        assert!((slope - 4.0).abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn rkf45_meets_tolerance() {
        let settings = IntegratorSettings {
            record_rejected: true,
            ..IntegratorSettings::rkf45(1e-10, 1e-10, 1.0)
        };
        let sol = integrate(exp_rhs, &[1.0], &settings, &mut []).unwrap();
        assert!(sol.accepted().all(|r| r.error_estimate <= 1.0));
        assert!(sol.records.iter().filter(|r| !r.accepted).all(|r| r.error_estimate > 1.0));
        assert_eq!(sol.last().t, 1.0);
        assert!((sol.last().state[0] - E).abs() < 1e-8);
    }

    #[test]
    fn rkf45_underflow_is_reported() {
        let blowup = |_t: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[0] * y[0];
            Ok(())
        };
        let err = integrate(blowup, &[1.0], &IntegratorSettings::rkf45(1e-10, 1e-10, 2.0), &mut []).unwrap_err();
        assert!(matches!(err, Error::StepRejected { .. }), "{err:?}");
    }

    #[test]
    fn hook_renormalization_contract() {
        let rot = |_t: f64, y: &[f64], d: &mut [f64]| {
            // rotation plus a small radial growth the hook has to remove
            d[0] = -y[1] + 0.01 * y[0];
            d[1] = y[0] + 0.01 * y[1];
            Ok(())
        };
        let mut order = Vec::new();
        let mut renorm = |_step: usize, _t: f64, y: &mut [f64]| {
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            y[0] /= r;
            y[1] /= r;
            Ok(())
        };
        let mut log = |step: usize, _t: f64, y: &mut [f64]| {
            order.push((step, (y[0] * y[0] + y[1] * y[1]).sqrt()));
            Ok(())
        };
        let sol = integrate(rot, &[1.0, 0.0], &IntegratorSettings::rk4(0.01, 1.0), &mut [&mut renorm, &mut log])
            .unwrap();
        for r in sol.records.iter().skip(1) {
            let norm = (r.state[0].powi(2) + r.state[1].powi(2)).sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
        // the logging hook saw the post-renormalization state of every step
        assert_eq!(order.len(), 100);
        assert!(order.iter().all(|(_, n)| (n - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn hook_abort_propagates() {
        let mut abort = |step: usize, _t: f64, _y: &mut [f64]| {
            if step == 3 {
                Err(Error::HookAbort("stop".into()))
            } else {
                Ok(())
            }
        };
        let err = integrate(exp_rhs, &[1.0], &IntegratorSettings::rk4(0.1, 1.0), &mut [&mut abort]).unwrap_err();
        assert_eq!(err, Error::HookAbort("stop".into()));
    }

    #[test]
    fn dense_eval_contract() {
        let sol = integrate(exp_rhs, &[1.0], &IntegratorSettings::rk4(0.01, 1.0), &mut []).unwrap();
        let r = &sol.records[37];
        assert_eq!(sol.dense_eval(r.t).unwrap(), r.state);
        let t = 0.5 * (sol.records[50].t + sol.records[51].t);
        assert!((sol.dense_eval(t).unwrap()[0] - t.exp()).abs() <= 1e-9);
        assert!(matches!(sol.dense_eval(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(sol.dense_eval(-0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn deterministic() {
        let a = integrate(oscillator, &[1.0, 0.3], &IntegratorSettings::rkf45(1e-9, 1e-9, 5.0), &mut []).unwrap();
        let b = integrate(oscillator, &[1.0, 0.3], &IntegratorSettings::rkf45(1e-9, 1e-9, 5.0), &mut []).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_settings() {
        assert!(IntegratorSettings::rk4(0.0, 1.0).validate().is_err());
        assert!(IntegratorSettings::rk4(0.1, -1.0).validate().is_err());
        assert!(IntegratorSettings::rkf45(0.0, 0.0, 1.0).validate().is_err());
    }
}

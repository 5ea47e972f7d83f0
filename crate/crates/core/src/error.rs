use thiserror::Error;

/// Errors raised by the mechanics, reduction and integration routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not skew-symmetric (|m + m^T| = {residual:e})")]
    NotSkew { residual: f64 },
    #[error("velocity is not tangent to SO(3) at the base point (residual {residual:e})")]
    NotTangent { residual: f64 },
    #[error("vector is not a unit vector (| |v| - 1 | = {residual:e})")]
    NotUnit { residual: f64 },
    #[error("matrix cannot be projected onto SO(3): {0}")]
    Degenerate(String),
    #[error("reduced state violates the sphere constraint: {0}")]
    ConstraintViolated(String),
    #[error("metric is not positive definite at q = ({q0}, {q1})")]
    SingularMetric { q0: f64, q1: f64 },
    #[error("point lies outside the region of possible motions (h - V = {margin:e})")]
    TurningRegion { margin: f64 },
    #[error("curve is not parameterized by arclength (speed {speed})")]
    NotUnitSpeed { speed: f64 },
    #[error("adaptive step rejected below the minimum step at t = {t}")]
    StepRejected { t: f64 },
    #[error("step hook aborted the integration: {0}")]
    HookAbort(String),
    #[error("time {t} lies outside the covered interval [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("invariant residual {residual:e} exceeded hard limit at t = {t}")]
    InvariantBlown { t: f64, residual: f64 },
    #[error("invalid integrator settings: {0}")]
    InvalidSettings(String),
    #[error("invalid inertia tensor: {0}")]
    InvalidInertia(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
}

pub type Result<T> = std::result::Result<T, Error>;

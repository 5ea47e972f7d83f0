//! Rigid body about a fixed point, reduced by the rotations about the
//! vertical to a gyroscopic system on the Poisson sphere.
//!
//! * [`so3`]: rotations, spins and the projection to the Poisson sphere.
//! * [`body`]: Euler-Poisson dynamics and full-configuration simulation.
//! * [`reduction`]: connection, reduced metric, curvature and amended potential.
//! * [`gyro2d`]: surface systems with gyroscopic forces, Maupertuis metric,
//!   chart atlas of the sphere.
//! * [`integrate`]: RK4 and RKF45 with step hooks and dense output.

// `!(x > y)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod error;
pub mod gyro2d;
pub mod integrate;
pub mod reduction;
pub mod so3;

pub use body::{
    simulate_body, BodyInitial, BodyPhaseState, BodySample, FullState, InertiaTensor, PotentialSpec, Trajectory,
};
pub use error::{Error, Result};
pub use gyro2d::{
    simulate_reduced, Chart, ChartId, ChartState, GyroSystem2D, Mat2, ReducedSample, ReducedSimulation,
    ReducedTrajectory, Vec2,
};
pub use integrate::{IntegratorSettings, Method, Solution};
pub use reduction::{ReducedState, ReducedSystemSpec};
pub use so3::{Mat3, Rotation, Vec3};

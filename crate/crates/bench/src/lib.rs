//! Benchmark fixtures; the benchmarks themselves live in `benches/`.

use poisson_reduce_core::gyro2d::{reduced_system_in_chart, ReducedChartSystem};
use poisson_reduce_core::{
    BodyPhaseState, Chart, ChartState, InertiaTensor, PotentialSpec, ReducedState, ReducedSystemSpec, Vec3,
};

pub fn heavy_top() -> (InertiaTensor, PotentialSpec) {
    (InertiaTensor::new(2.0, 1.5, 1.0).expect("positive"), PotentialSpec::linear(Vec3::z()))
}

pub fn body_state() -> BodyPhaseState {
    BodyPhaseState::new(Vec3::new(0.3, -0.5, 0.7).normalize(), Vec3::new(1.0, 2.0, 3.0)).expect("unit")
}

pub fn reduced_state() -> ReducedState {
    let nu = Vec3::new(0.3, -0.5, 0.7).normalize();
    let v = Vec3::new(0.4, 0.2, -0.3);
    ReducedState::new(nu, v - nu * nu.dot(&v)).expect("tangent")
}

pub fn reduced_spec() -> ReducedSystemSpec {
    let (i, v) = heavy_top();
    ReducedSystemSpec::new(i, v, 1.0)
}

/// Reduced heavy top in the north chart with a state in it.
pub fn chart_system() -> (ReducedChartSystem, ChartState) {
    let s = reduced_state();
    (reduced_system_in_chart(&reduced_spec(), Chart::north()), Chart::north().state_from_sphere(&s.nu(), &s.nudot()))
}

//! Linear foot placement control (LFPC) for the linear inverted pendulum.
//!
//! - [`lip`]: closed-form single-support dynamics and an RK4 cross-check.
//! - [`controller`]: the 2D and 3D foot placement laws.
//! - [`analysis`]: return map, balance criterion, periodic gaits.
//! - [`sim`]: multi-step walking in 2D and 3D with pushes.

pub mod analysis;
pub mod controller;
pub mod error;
pub mod lip;
pub mod sim;

pub use analysis::{
    apply_transition, balance_bounds, classify_regime, eigenvalue_lambda2, inplace_step_length,
    period1_fixed_point, period2_fixed_point, poincare_map, region_scan, return_map_jacobian,
    special_b, stability_report, touchdown_state, Axis, FixedPointSolution, Regime, RegionGrid,
    ReturnMapJacobian, SpecialGains, StabilityReport, StepLengths,
};
pub use controller::{lfpc_2d, lfpc_3d, FootPlacement, Gait3DParams, LegId, LegParams};
pub use error::{Error, Result};
pub use lip::{
    flow, flow_numeric, orbital_energy, step_constants, time_constant, ModelParams, PendulumState,
    StepConstants,
};

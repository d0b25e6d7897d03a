//! Finite-time dynamics: time-ordered unitary work strokes and Markovian
//! bath contact in the instantaneous eigenbasis of the ladder.

mod bath;
mod gkls;
mod trajectory;
mod unitary;

pub use bath::{
    bose_occupation, coupling_operators, dissipators, jump_operators, ohmic_rate,
    ohmic_rate_scaled, BathSpec, Dissipator, JumpOperator, BOHR_TOL,
};
pub use gkls::{
    evolve_fixed, evolve_gkls, evolve_static, heat_between, heat_integral, isomagnetic_stroke,
    thermalize, ThermalizationMode, STATIONARY_RATE,
};
pub use trajectory::{GridPoint, StrokeKind, Trajectory, SNAPSHOTS};
pub use unitary::{
    propagate_unitary, propagate_unitary_fixed, ramp_propagator, ramp_propagator_refined,
    work_integral,
};

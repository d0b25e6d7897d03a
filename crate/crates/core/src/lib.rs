//! Measurement-driven quantum Otto engine on a four-qubit spin ladder.
//!
//! A driven spin pair (qubits 1–2) exchanges excitations with an ancilla pair
//! (qubits 3–4). Each cycle ramps the field up, thermalizes against a single
//! hot bath, ramps the field back down and replaces the cold bath by a
//! projective measurement on either pair. The crate provides the finite-time
//! dynamics (time-ordered unitaries and a Davies-type master equation), the
//! thermodynamic bookkeeping, and spectral diagnostics.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below are what the command-line tool uses.

// `!(x > 0)` is used deliberately so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cycle;
pub mod dynamics;
pub mod error;
pub mod measurement;
pub mod model;
pub mod qops;
pub mod scalar;
pub mod thermo;

pub use error::{OttoError, Result};
pub use scalar::{Real, C};

pub type CMatrix64 = qops::CMatrix<f64>;
pub type CMatrix32 = qops::CMatrix<f32>;
pub type QState64 = qops::QState<f64>;
pub type QState32 = qops::QState<f32>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type ModelParams32 = model::ModelParams<f32>;

pub type CycleConfig64 = cycle::CycleConfig<f64>;
pub type CycleLedger64 = thermo::CycleLedger<f64>;
pub type RunHistory64 = thermo::RunHistory<f64>;
pub type SpectrumTable64 = analysis::SpectrumTable<f64>;
pub type TransitionMatrix64 = analysis::TransitionMatrix<f64>;

//! Dense complex linear algebra and quantum-state primitives for small
//! registers (up to four qubits).

mod eigh;
mod matrix;
mod pauli;
mod state;

pub use eigh::{
    degenerate_blocks, eigh, eigh_with_guess, phase_propagator, propagator, unitarity_error,
    Spectrum,
};
pub use matrix::{commutator, kron, CMatrix};
pub use pauli::{embed, pauli, pauli_embed, xx_plus_yy, PauliAxis};
pub use state::{
    boltzmann_weights, gibbs_from_spectrum, gibbs_state, partial_trace, trace_distance,
    von_neumann_entropy, QState,
};

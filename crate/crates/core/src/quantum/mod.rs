//! Truncated qubit ⊗ Fock Hilbert space.

mod density;
mod operators;
mod phase;
mod states;

pub use density::{cavity_reduced, DensityMatrix};
pub use operators::{build_operators, tensor, FockTruncation, OperatorMatrix, Operators, HERMITIAN_TOL};
pub use phase::{labels_to_phase, phase_to_labels, PhasePoint, BLOCH_RADIUS2};
pub use states::{
    bloch_state, coherent_tail_mass, expectation, glauber_state, product_state, variance, KetState,
    COHERENT_TAIL_TOL, NORM_TOL,
};

pub(crate) use operators::col;
pub(crate) use states::{inner, norm, reduced_qubit};

//! Model parameters, Hamiltonians in the lab, rotating and squeezed frames,
//! and the unitaries connecting them.

mod equivalence;
mod hamiltonians;
mod params;
mod unitaries;

pub use equivalence::{verify_frame_equivalence, FrameEquivalence};
pub use hamiltonians::{
    build_h_eff, build_h_err, build_h_lab, build_h_perturbed, build_h_rabi, build_h_rotated, excitation_number,
    LabHamiltonian,
};
pub use params::{
    derive_params, squeezing_from_lambda, DerivedParams, Phase, SystemParams, DEFAULT_OMEGA_P,
    DELTA_C, ETA_SEMICLASSICAL,
};
pub use unitaries::{
    check_squeeze_truncation, rotation_unitary, squeeze_unitary, squeezed_vacuum_tail,
    SQUEEZE_MARGIN, SQUEEZE_TAIL_TOL,
};

//! Numerical laboratory for a two-photon driven Jaynes–Cummings model viewed
//! in its squeezed-light frame, where it becomes an effective quantum Rabi
//! model with exponentially enhanced coupling.
//!
//! * [`quantum`]: truncated qubit ⊗ Fock space, states and operators.
//! * [`frames`]: parameters and Hamiltonians in each frame.
//! * [`propagation`]: spectral and time-dependent evolution.
//! * [`ode`]: adaptive Runge–Kutta integrator.
//! * [`semiclassical`]: mean-field flow and Poincaré sections.
//! * [`diagnostics`]: echo, OTOC, entropy, recurrence and Husimi tools.

pub mod diagnostics;
pub mod error;
pub mod frames;
pub mod ode;
pub mod presets;
pub mod propagation;
pub mod quantum;
pub mod semiclassical;

pub use error::{Error, ErrorKind, Result};

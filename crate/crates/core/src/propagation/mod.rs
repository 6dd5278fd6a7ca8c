//! Time evolution: exact spectral propagation for static Hamiltonians and
//! adaptive Runge–Kutta integration for time-dependent ones.

mod spectral;
mod time_dependent;

pub use spectral::{diagonalize, for_each_pair, Evolution, SpectralPropagator};
pub use time_dependent::{
    evolve_time_dependent, evolve_time_dependent_series, integrator_for, FnHamiltonian,
    TimeDependentHamiltonian,
};

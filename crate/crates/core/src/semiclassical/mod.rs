//! Mean-field limit: classical Hamiltonian on the Bloch disk times the field
//! plane, trajectories and Poincaré sections.

mod classical;
mod dynamics;
mod section;

pub use classical::{
    classical_energy, classical_gradient, from_sphere, solve_p2_on_shell, to_sphere, ClassicalModel,
    ShellRoot,
    BOUNDARY_GUARD,
};
pub use dynamics::{
    integrate_trajectory, Trajectory, BOUNDARY_MARGIN, DEFAULT_DRIFT_TOL, DEFAULT_TOL,
};
pub use section::{
    closed_curve_statistic, default_seeds, poincare_section, section_scan, Crossing,
    CurveStatistic, PoincareSection, SectionScan, SeedSection, CLOSED_CURVE_RATIO, CROSSING_TOL,
};

//! Chaos indicators evaluated on squeezed-frame dynamics.

mod echo;
mod entropy;
mod husimi;
mod otoc;
mod series;

pub use echo::{
    edge_mass, fidelity_vs_r_scan, loschmidt_echo, loschmidt_echo_scaled, recurrence, recurrence_with, revival_peak, COLLAPSE_LEVEL,
    HamiltonianChoice, EDGE_LEVELS, EDGE_MASS_TOL,
};
pub use entropy::{
    average_entropy, entropy_map, entropy_series, entropy_series_with, linear_entropy, linear_entropy_ket,
    time_averaged_entropy, AdaptiveAverage, CellStatus, EntropyMap, MapCell, MapGrid, AVERAGE_REL_TOL,
    DEFAULT_INTERVALS, ENTROPY_MAX, MAX_DOUBLINGS,
};
pub use husimi::{
    husimi_of_state, husimi_snapshot, support_radius, HusimiGrid, HusimiGridSpec, DEFAULT_HUSIMI_POINTS,
    HUSIMI_NORM_TOL,
};
pub use otoc::{
    default_fit_window, lyapunov_fit, otoc_direct, otoc_direct_with, otoc_epsilon_check, otoc_variance,
    otoc_variance_of, scrambling_time, variance_with, EpsilonConsistency, LyapunovFit, OtocConfig, OtocDirect,
    OtocOperator, ScramblingTime, DEFAULT_EPSILON, EPSILON_WARN, FIT_RELIABLE_R2,
};
pub use series::{fidelity, uniform_times, TimeSeries};

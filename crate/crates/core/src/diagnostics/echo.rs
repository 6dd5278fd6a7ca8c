use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::series::{check_increasing, fidelity_raw, TimeSeries};
use crate::error::{Error, Result};
use crate::frames::{build_h_perturbed, build_h_rabi, SystemParams};
use crate::propagation::{diagonalize, for_each_pair, SpectralPropagator};
use crate::quantum::{product_state, FockTruncation, KetState, OperatorMatrix};

/// Fock levels at the top of the truncation watched for leakage.
pub const EDGE_LEVELS: usize = 10;
/// Largest population allowed on those levels.
pub const EDGE_MASS_TOL: f64 = 1e-6;

/// Which squeezed-frame Hamiltonian drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianChoice {
    /// `H_Rabi + H_err`.
    Eff,
    /// `H_Rabi` alone.
    Rabi,
    /// `H_Rabi + s H_err`.
    Perturbed(f64),
}

impl HamiltonianChoice {
    pub fn build(self, p: &SystemParams, trunc: FockTruncation) -> OperatorMatrix {
        match self {
            Self::Eff => build_h_perturbed(p, trunc, 1.0),
            Self::Rabi => build_h_rabi(p, trunc),
            Self::Perturbed(s) => build_h_perturbed(p, trunc, s),
        }
    }

    pub fn propagator(self, p: &SystemParams, trunc: FockTruncation) -> Result<SpectralPropagator> {
        diagonalize(&self.build(p, trunc))
    }
}

pub(crate) fn truncation_of(psi: &KetState) -> Result<FockTruncation> {
    FockTruncation::from_dim(psi.dim())
}

/// Population on the top [`EDGE_LEVELS`] Fock levels.
pub fn edge_mass(psi: &[c64]) -> f64 {
    let d = psi.len() / 2;
    let from = d.saturating_sub(EDGE_LEVELS);
    psi[from..d]
        .iter()
        .chain(&psi[d + from..])
        .map(|z| z.norm_sqr())
        .sum()
}

/// Loschmidt echo between `H_Rabi` and `H_Rabi + err_scale H_err`, evaluated
/// as the overlap of the two forward evolutions.
pub fn loschmidt_echo_scaled(
    p: &SystemParams,
    psi0: &KetState,
    times: &[f64],
    err_scale: f64,
) -> Result<TimeSeries> {
    check_increasing(times)?;
    let trunc = truncation_of(psi0)?;
    let (rabi, pert) = rayon::join(
        || HamiltonianChoice::Rabi.propagator(p, trunc),
        || HamiltonianChoice::Perturbed(err_scale).propagator(p, trunc),
    );
    let (rabi, pert) = (rabi?, pert?);
    echo_from(&rabi, &pert, psi0, times)
}

/// `L(t) = |<psi(0)| e^{iHt} e^{-i(H + H_err)t} |psi(0)>|^2` with `H = H_Rabi`.
pub fn loschmidt_echo(p: &SystemParams, psi0: &KetState, times: &[f64]) -> Result<TimeSeries> {
    loschmidt_echo_scaled(p, psi0, times, 1.0)
}

fn echo_from(
    a: &SpectralPropagator,
    b: &SpectralPropagator,
    psi0: &KetState,
    times: &[f64],
) -> Result<TimeSeries> {
    let ea = a.prepare(psi0)?;
    let eb = b.prepare(psi0)?;
    let mut values = Vec::with_capacity(times.len());
    for_each_pair(&ea, &eb, times, |_, _, x, y| values.push(fidelity_raw(x, y)))?;
    TimeSeries::new("loschmidt_echo", times.to_vec(), values)
}

/// `L(T)` as a function of `r`, with the initial labels `(tau, beta)` held
/// fixed. The returned series is indexed by `r` (stored in `times`).
pub fn fidelity_vs_r_scan(
    p_base: &SystemParams,
    tau: c64,
    beta: c64,
    trunc: FockTruncation,
    t_end: f64,
    r_values: &[f64],
) -> Result<TimeSeries> {
    check_increasing(r_values)?;
    let psi0 = product_state(tau, beta, trunc)?;
    let values = r_values
        .par_iter()
        .map(|&r| {
            let p = p_base.with_r(r)?;
            let rabi = HamiltonianChoice::Rabi.propagator(&p, trunc)?;
            let eff = HamiltonianChoice::Eff.propagator(&p, trunc)?;
            let a = rabi.evolve(&psi0, t_end)?;
            let b = eff.evolve(&psi0, t_end)?;
            for s in [&a, &b] {
                let mass = edge_mass(s.amplitudes());
                if mass > EDGE_MASS_TOL {
                    return Err(Error::FockEdge {
                        r,
                        n_max: trunc.n_max(),
                        mass,
                        limit: EDGE_MASS_TOL,
                    });
                }
            }
            Ok(fidelity_raw(a.amplitudes(), b.amplitudes()))
        })
        .collect::<Result<Vec<f64>>>()?;
    TimeSeries::new("fidelity_vs_r", r_values.to_vec(), values)
}

/// Recurrence level below which the initial state counts as collapsed.
pub const COLLAPSE_LEVEL: f64 = 0.1;

/// Largest `P(t)` after the first sample below `level`; `None` if the
/// recurrence never collapses.
pub fn revival_peak(series: &TimeSeries, level: f64) -> Option<f64> {
    let i = series.values.iter().position(|&v| v < level)?;
    series.max_after(series.times[i])
}

/// `P(t) = |<psi(0)|psi(t)>|^2` under `H_eff`.
pub fn recurrence(psi0: &KetState, p: &SystemParams, times: &[f64]) -> Result<TimeSeries> {
    check_increasing(times)?;
    let prop = HamiltonianChoice::Eff.propagator(p, truncation_of(psi0)?)?;
    recurrence_with(&prop, psi0, times)
}

pub fn recurrence_with(prop: &SpectralPropagator, psi0: &KetState, times: &[f64]) -> Result<TimeSeries> {
    let ev = prop.prepare(psi0)?;
    let values = times.iter().map(|&t| ev.autocorrelation(t).norm_sqr()).collect();
    TimeSeries::new("recurrence", times.to_vec(), values)
}

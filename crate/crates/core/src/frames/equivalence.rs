use num_complex::Complex64 as c64;
use serde::Serialize;

use super::hamiltonians::{build_h_eff, LabHamiltonian};
use super::params::SystemParams;
use super::unitaries::{rotation_phases, squeeze_unitary};
use crate::error::{Error, Result};
use crate::propagation::{diagonalize, evolve_time_dependent_series};
use crate::quantum::{inner, norm, FockTruncation, KetState, OperatorMatrix};

/// Overlap between the lab-frame trajectory and the mapped squeezed-frame
/// trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct FrameEquivalence {
    pub times: Vec<f64>,
    pub overlaps: Vec<f64>,
    /// Norm lost when mapping the initial state back to the lab frame.
    pub initial_norm_loss: f64,
}

impl FrameEquivalence {
    pub fn min_overlap(&self) -> f64 {
        self.overlaps.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `(1 ⊗ U) psi` for a cavity operator `U`.
fn apply_cavity(u: &OperatorMatrix, psi: &[c64]) -> Result<Vec<c64>> {
    let d = u.dim();
    let mut out = Vec::with_capacity(psi.len());
    for half in psi.chunks(d) {
        out.extend(u.apply(half)?);
    }
    Ok(out)
}

/// Propagates `U_S† psi0` under the time-dependent lab Hamiltonian and
/// `psi0` under the static squeezed-frame Hamiltonian, then compares them at
/// `steps + 1` equally spaced times in `[0, t_end]`.
pub fn verify_frame_equivalence(
    p: &SystemParams,
    psi0_squeezed: &KetState,
    t_end: f64,
    steps: usize,
    tol: f64,
) -> Result<FrameEquivalence> {
    let trunc = FockTruncation::from_dim(psi0_squeezed.dim())?;
    if !(t_end >= 0.0) || steps == 0 {
        return Err(Error::InvalidParams(format!(
            "need t_end >= 0 and steps > 0 (got {t_end}, {steps})"
        )));
    }
    let us = squeeze_unitary(p.r, trunc)?;
    let us_dag = us.adjoint();
    let lab0 = apply_cavity(&us_dag, psi0_squeezed.amplitudes())?;
    let initial_norm_loss = 1.0 - norm(&lab0);
    let lab0 = KetState::normalized(lab0)?;

    let times: Vec<f64> = (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect();
    let lab = LabHamiltonian::new(*p, trunc);
    let lab_states = evolve_time_dependent_series(&lab, &lab0, 0.0, &times, tol)?;

    let eff = diagonalize(&build_h_eff(p, trunc))?;
    let ev = eff.prepare(psi0_squeezed)?;
    let mut overlaps = Vec::with_capacity(times.len());
    let mut failure = None;
    ev.for_each(&times, |i, t, psi_s| {
        if failure.is_some() {
            return;
        }
        match apply_cavity(&us_dag, psi_s) {
            Ok(mut v) => {
                // U_R†(t): conjugate phases.
                for (z, ph) in v.iter_mut().zip(rotation_phases(p, t, trunc)) {
                    *z *= ph.conj();
                }
                overlaps.push(inner(lab_states[i].amplitudes(), &v).norm_sqr());
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(FrameEquivalence {
        times,
        overlaps,
        initial_norm_loss,
    })
}

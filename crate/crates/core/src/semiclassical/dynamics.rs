use serde::Serialize;

use super::classical::{from_sphere, to_sphere, ClassicalModel};
use crate::error::{Error, Result};
use crate::frames::SystemParams;
use crate::ode::{Control, Dop853, StepView};
use crate::quantum::{PhasePoint, BLOCH_RADIUS2};

/// Default per-step integrator tolerance for mean-field trajectories.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default bound on the relative energy drift.
pub const DEFAULT_DRIFT_TOL: f64 = 1e-8;
/// Seeds must start at least this far inside the Bloch disk.
pub const BOUNDARY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    /// `max |H - E0| / |E0|` over the recorded points.
    pub energy_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> PhasePoint {
        *self.points.last().expect("trajectory holds its initial point")
    }

    pub fn check_drift(&self, limit: f64) -> Result<()> {
        if self.energy_drift > limit {
            return Err(Error::ToleranceNotMet(format!(
                "relative energy drift {:.3e} exceeds {limit:.1e}",
                self.energy_drift
            )));
        }
        Ok(())
    }
}

pub(crate) type FlowSystem = (usize, Box<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>);

/// Flow in sphere coordinates `(s_x, s_y, s_z, q2, p2)`.
pub(crate) fn flow_system(model: ClassicalModel) -> FlowSystem {
    (
        5,
        Box::new(move |_t, z, dz| {
            let f = model.sphere_flow(&[z[0], z[1], z[2], z[3], z[4]]);
            dz.copy_from_slice(&f);
        }),
    )
}

/// Tracks the relative energy error along a run.
pub(crate) struct DriftMonitor {
    model: ClassicalModel,
    e0: f64,
    pub worst: f64,
}

impl DriftMonitor {
    pub fn new(model: ClassicalModel, z0: &[f64; 5]) -> Self {
        Self {
            model,
            e0: model.sphere_energy(z0),
            worst: 0.0,
        }
    }

    pub fn observe(&mut self, z: &[f64]) {
        let e = self.model.sphere_energy(&[z[0], z[1], z[2], z[3], z[4]]);
        let scale = if self.e0 == 0.0 { 1.0 } else { self.e0.abs() };
        self.worst = self.worst.max((e - self.e0).abs() / scale);
    }
}

pub(crate) fn check_start(pt0: &PhasePoint) -> Result<()> {
    let radius2 = pt0.qubit_radius2();
    if !(radius2 < BLOCH_RADIUS2 - BOUNDARY_MARGIN) {
        return Err(Error::BlochDomain { q1: pt0.q1, p1: pt0.p1 });
    }
    if !pt0.to_array().iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidParams("non-finite phase point".into()));
    }
    Ok(())
}

/// Runs the equations of motion on the Bloch sphere, calling `visit` after
/// each accepted step. Step states are sphere coordinates; see
/// [`from_sphere`].
pub(crate) fn run_flow<F>(
    pt0: &PhasePoint,
    p: &SystemParams,
    t_end: f64,
    tol: f64,
    mut visit: F,
) -> Result<(f64, DriftMonitor)>
where
    F: FnMut(&mut StepView<'_, FlowSystem>) -> Control,
{
    check_start(pt0)?;
    let model = ClassicalModel::new(p);
    let sys = flow_system(model);
    let z0 = to_sphere(pt0);
    let mut drift = DriftMonitor::new(model, &z0);
    let summary = Dop853::with_tolerance(tol).integrate(&sys, 0.0, &z0, t_end, |step| {
        drift.observe(step.y());
        visit(step)
    })?;
    Ok((summary.t, drift))
}

/// Integrates the mean-field equations from `pt0` to `t_end` (either sign),
/// recording every accepted step.
pub fn integrate_trajectory(
    pt0: &PhasePoint,
    p: &SystemParams,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    let mut times = vec![0.0];
    let mut points = vec![*pt0];
    let (_, drift) = run_flow(pt0, p, t_end, tol, |step| {
        times.push(step.t());
        points.push(from_sphere(step.y()));
        Control::Continue
    })?;
    Ok(Trajectory {
        times,
        points,
        energy_drift: drift.worst,
    })
}

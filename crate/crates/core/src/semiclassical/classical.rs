use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::{derive_params, SystemParams};
use crate::quantum::{PhasePoint, BLOCH_RADIUS2};

/// Distance from the Bloch boundary below which the gradient is refused.
pub const BOUNDARY_GUARD: f64 = 1e-9;

/// Coefficients of the mean-field Hamiltonian for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalModel {
    pub delta_a: f64,
    pub omega_c: f64,
    pub g_tilde: f64,
    /// `(g/2) e^{-r}`.
    pub g_err: f64,
}

impl ClassicalModel {
    pub fn new(p: &SystemParams) -> Self {
        let d = derive_params(p);
        Self {
            delta_a: p.delta_a,
            omega_c: d.omega_c_eff,
            g_tilde: d.g_tilde,
            g_err: 0.5 * p.g * (-p.r).exp(),
        }
    }

    /// Energy without domain checks. NaN outside the Bloch disk.
    pub fn energy_unchecked(&self, y: &[f64; 4]) -> f64 {
        let [q1, p1, q2, p2] = *y;
        let rho = q1 * q1 + p1 * p1;
        let s = (4.0 - 2.0 * rho).sqrt();
        0.5 * self.delta_a * (rho - 1.0)
            + 0.5 * self.omega_c * (q2 * q2 + p2 * p2)
            + s * (self.g_tilde * q1 * q2 - self.g_err * p1 * p2)
    }

    /// `(dH/dq1, dH/dp1, dH/dq2, dH/dp2)` without domain checks.
    pub fn gradient_unchecked(&self, y: &[f64; 4]) -> [f64; 4] {
        let [q1, p1, q2, p2] = *y;
        let rho = q1 * q1 + p1 * p1;
        let s = (4.0 - 2.0 * rho).sqrt();
        let coupling = self.g_tilde * q1 * q2 - self.g_err * p1 * p2;
        // ds/dq1 = -2 q1 / s, ds/dp1 = -2 p1 / s
        let c = -2.0 * coupling / s;
        [
            self.delta_a * q1 + self.g_tilde * q2 * s + c * q1,
            self.delta_a * p1 - self.g_err * p2 * s + c * p1,
            self.omega_c * q2 + self.g_tilde * q1 * s,
            self.omega_c * p2 - self.g_err * p1 * s,
        ]
    }

    /// Hamilton's equations `(dq1, dp1, dq2, dp2)/dt`.
    pub fn flow(&self, y: &[f64; 4]) -> [f64; 4] {
        let [hq1, hp1, hq2, hp2] = self.gradient_unchecked(y);
        [hp1, -hq1, hp2, -hq2]
    }

    /// Energy in sphere coordinates, see [`to_sphere`].
    pub fn sphere_energy(&self, z: &[f64; 5]) -> f64 {
        let [sx, sy, sz, q2, p2] = *z;
        0.5 * self.delta_a * sz
            + 0.5 * self.omega_c * (q2 * q2 + p2 * p2)
            + SQRT_2 * (self.g_tilde * sx * q2 - self.g_err * sy * p2)
    }

    /// Equations of motion in sphere coordinates: `ds/dt = 2 s x dH/ds`
    /// for the qubit, Hamilton's equations for the oscillator.
    pub fn sphere_flow(&self, z: &[f64; 5]) -> [f64; 5] {
        let [sx, sy, sz, q2, p2] = *z;
        let w = [
            SQRT_2 * self.g_tilde * q2,
            -SQRT_2 * self.g_err * p2,
            0.5 * self.delta_a,
        ];
        [
            2.0 * (sy * w[2] - sz * w[1]),
            2.0 * (sz * w[0] - sx * w[2]),
            2.0 * (sx * w[1] - sy * w[0]),
            self.omega_c * p2 - SQRT_2 * self.g_err * sy,
            -(self.omega_c * q2 + SQRT_2 * self.g_tilde * sx),
        ]
    }
}

/// Maps a phase point onto the unit Bloch sphere:
/// `s_x = q1 sqrt(2 - rho)`, `s_y = p1 sqrt(2 - rho)`, `s_z = rho - 1`.
/// The disk boundary `rho = 2` collapses to the pole `s_z = 1`, where the
/// flow is regular.
pub fn to_sphere(pt: &PhasePoint) -> [f64; 5] {
    let rho = pt.qubit_radius2();
    let w = (2.0 - rho).max(0.0).sqrt();
    [pt.q1 * w, pt.p1 * w, rho - 1.0, pt.q2, pt.p2]
}

/// Inverse of [`to_sphere`]; the pole itself maps to `q1 = p1 = 0`.
pub fn from_sphere(z: &[f64]) -> PhasePoint {
    let w = (1.0 - z[2]).max(0.0).sqrt();
    let (q1, p1) = if w > 0.0 { (z[0] / w, z[1] / w) } else { (0.0, 0.0) };
    PhasePoint::new(q1, p1, z[3], z[4])
}

/// Mean-field energy of a phase point; requires `q1^2 + p1^2 <= 2`.
pub fn classical_energy(pt: &PhasePoint, p: &SystemParams) -> Result<f64> {
    if !pt.in_bloch_domain() {
        return Err(Error::BlochDomain { q1: pt.q1, p1: pt.p1 });
    }
    Ok(ClassicalModel::new(p).energy_unchecked(&pt.to_array()))
}

/// Analytic gradient; refused within [`BOUNDARY_GUARD`] of the boundary.
pub fn classical_gradient(pt: &PhasePoint, p: &SystemParams) -> Result<[f64; 4]> {
    let radius2 = pt.qubit_radius2();
    if !(radius2 <= BLOCH_RADIUS2 - BOUNDARY_GUARD) {
        return Err(Error::BoundaryProximity { radius2 });
    }
    Ok(ClassicalModel::new(p).gradient_unchecked(&pt.to_array()))
}

/// Positive root of the energy condition in `p2` at `q2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellRoot {
    pub p2: f64,
    /// Both roots were positive; the larger one was taken.
    pub ambiguous: bool,
}

/// Solves `H(q1, p1, 0, p2) = E` for `p2 > 0`.
pub fn solve_p2_on_shell(q1: f64, p1: f64, energy: f64, p: &SystemParams) -> Option<ShellRoot> {
    let rho = q1 * q1 + p1 * p1;
    if !(rho <= BLOCH_RADIUS2) {
        return None;
    }
    let m = ClassicalModel::new(p);
    let a = 0.5 * m.omega_c;
    let b = -m.g_err * p1 * (4.0 - 2.0 * rho).sqrt();
    let c = 0.5 * m.delta_a * (rho - 1.0) - energy;
    let disc = b * b - 4.0 * a * c;
    if !(disc >= 0.0) || a <= 0.0 {
        return None;
    }
    // Cancellation-free pair of roots.
    let s = disc.sqrt();
    let qv = -0.5 * (b + b.signum() * s);
    let (r1, r2) = if qv == 0.0 {
        (0.0, 0.0)
    } else {
        (qv / a, c / qv)
    };
    let hi = r1.max(r2);
    let lo = r1.min(r2);
    if hi <= 0.0 {
        return None;
    }
    Some(ShellRoot {
        p2: hi,
        ambiguous: lo > 0.0,
    })
}

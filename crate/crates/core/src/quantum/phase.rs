use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound of `q1^2 + p1^2` (Bloch-sphere domain).
pub const BLOCH_RADIUS2: f64 = 2.0;

/// Semiclassical coordinates: `(q1, p1)` for the qubit, `(q2, p2)` for the
/// field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q1: f64,
    pub p1: f64,
    pub q2: f64,
    pub p2: f64,
}

impl PhasePoint {
    pub fn new(q1: f64, p1: f64, q2: f64, p2: f64) -> Self {
        Self { q1, p1, q2, p2 }
    }

    pub fn qubit_radius2(&self) -> f64 {
        self.q1 * self.q1 + self.p1 * self.p1
    }

    pub fn in_bloch_domain(&self) -> bool {
        self.qubit_radius2() <= BLOCH_RADIUS2
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q1, self.p1, self.q2, self.p2]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Coherent-state labels `(tau, beta)` to phase-space coordinates.
pub fn labels_to_phase(tau: c64, beta: c64) -> PhasePoint {
    let f = (2.0 / (1.0 + tau.norm_sqr())).sqrt();
    let s = 2f64.sqrt();
    PhasePoint::new(f * tau.re, f * tau.im, s * beta.re, s * beta.im)
}

/// Inverse map; requires the strict interior `q1^2 + p1^2 < 2`.
pub fn phase_to_labels(pt: &PhasePoint) -> Result<(c64, c64)> {
    let rho2 = pt.qubit_radius2();
    if !(rho2 < BLOCH_RADIUS2) {
        return Err(Error::BlochDomain { q1: pt.q1, p1: pt.p1 });
    }
    let tau = c64::new(pt.q1, pt.p1) / (BLOCH_RADIUS2 - rho2).sqrt();
    let beta = c64::new(pt.q2, pt.p2) / 2f64.sqrt();
    Ok((tau, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn caption_labels_map_to_coordinates() {
        let p = labels_to_phase(c64::new(0.825, 0.0), c64::new(0.0, 5.4461));
        // sqrt(2 / 1.680625) * 0.825
        assert!((p.q1 - 0.899_981_405_534_950_3).abs() < 1e-12);
        assert_eq!(p.p1, 0.0);
        assert_eq!(p.q2, 0.0);
        assert!((p.p2 - 7.701_948_482_040_114).abs() < 1e-12);

        let r1 = labels_to_phase(c64::new(7.0, 0.0), c64::new(0.0, 3.5384));
        assert!((r1.q1 - 1.4).abs() < 1e-15);

        let o = labels_to_phase(c64::new(0.0, 0.0), c64::new(0.0, 0.0));
        assert_eq!((o.q1, o.p1), (0.0, 0.0));
    }

    #[test]
    fn inverse_rejects_points_outside_the_bloch_disk() {
        let err = phase_to_labels(&PhasePoint::new(1.2, 0.9, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::BlochDomain { .. }));
        assert!(phase_to_labels(&PhasePoint::new(2f64.sqrt(), 0.0, 0.0, 0.0)).is_err());
    }

    proptest! {
        #[test]
        fn maps_are_mutually_inverse(
            radius in 0.0f64..1.4,
            angle in 0.0f64..std::f64::consts::TAU,
            q2 in -20.0f64..20.0,
            p2 in -20.0f64..20.0,
        ) {
            let pt = PhasePoint::new(radius * angle.cos(), radius * angle.sin(), q2, p2);
            let (tau, beta) = phase_to_labels(&pt).unwrap();
            let back = labels_to_phase(tau, beta);
            prop_assert!((back.q1 - pt.q1).abs() < 1e-10);
            prop_assert!((back.p1 - pt.p1).abs() < 1e-10);
            prop_assert!((back.q2 - pt.q2).abs() < 1e-10);
            prop_assert!((back.p2 - pt.p2).abs() < 1e-10);

            let (tau2, beta2) = phase_to_labels(&labels_to_phase(tau, beta)).unwrap();
            prop_assert!((tau2 - tau).norm() < 1e-10 * (1.0 + tau.norm()));
            prop_assert!((beta2 - beta).norm() < 1e-10);
        }
    }
}

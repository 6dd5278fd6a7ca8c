use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency unit: the cavity detuning `delta_c`.
pub const DELTA_C: f64 = 1.0;

/// Drive frequency used when none is given. Only the lab-frame Hamiltonian
/// depends on it.
pub const DEFAULT_OMEGA_P: f64 = 2.0;

/// `eta` above which the semiclassical description applies.
pub const ETA_SEMICLASSICAL: f64 = 18.0;

/// Physical parameters in units of `delta_c = 1`.
///
/// The squeezing parameter `r` is the primary input; the parametric drive
/// amplitude follows from `tanh 2r = lambda / delta_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Qubit detuning `omega_a - omega_p / 2`.
    pub delta_a: f64,
    /// Bare Jaynes–Cummings coupling.
    pub g: f64,
    /// Squeezing parameter.
    pub r: f64,
    /// Parametric drive frequency (lab frame only).
    pub omega_p: f64,
}

impl SystemParams {
    pub fn new(delta_a: f64, g: f64, r: f64) -> Result<Self> {
        let p = Self {
            delta_a,
            g,
            r,
            omega_p: DEFAULT_OMEGA_P,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters from the drive amplitude instead of `r`.
    pub fn from_lambda(delta_a: f64, g: f64, lambda: f64) -> Result<Self> {
        if !(lambda.abs() < DELTA_C) {
            return Err(Error::InvalidParams(format!(
                "drive amplitude |lambda| = {} must stay below the instability threshold {DELTA_C}",
                lambda.abs()
            )));
        }
        Self::new(delta_a, g, squeezing_from_lambda(lambda))
    }

    /// Accepts `r`, `lambda`, or both (which must agree to 1e-12).
    pub fn resolve(delta_a: f64, g: f64, r: Option<f64>, lambda: Option<f64>) -> Result<Self> {
        match (r, lambda) {
            (Some(r), None) => Self::new(delta_a, g, r),
            (None, Some(l)) => Self::from_lambda(delta_a, g, l),
            (Some(r), Some(l)) => {
                let p = Self::from_lambda(delta_a, g, l)?;
                if (p.r - r).abs() > 1e-12 {
                    return Err(Error::InvalidParams(format!(
                        "r = {r} inconsistent with lambda = {l} (implies r = {})",
                        p.r
                    )));
                }
                Self::new(delta_a, g, r)
            }
            (None, None) => Err(Error::InvalidParams("one of r or lambda is required".into())),
        }
    }

    pub fn with_drive_frequency(mut self, omega_p: f64) -> Result<Self> {
        self.omega_p = omega_p;
        self.validate()?;
        Ok(self)
    }

    pub fn with_r(mut self, r: f64) -> Result<Self> {
        self.r = r;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.delta_a, self.g, self.r, self.omega_p]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParams(format!("coupling g = {} < 0", self.g)));
        }
        if self.r < 0.0 {
            return Err(Error::InvalidParams(format!("squeezing r = {} < 0", self.r)));
        }
        if !(self.lambda().abs() < DELTA_C) {
            return Err(Error::InvalidParams(format!(
                "r = {} puts the drive at the instability threshold",
                self.r
            )));
        }
        Ok(())
    }

    pub fn delta_c(&self) -> f64 {
        DELTA_C
    }

    pub fn lambda(&self) -> f64 {
        DELTA_C * (2.0 * self.r).tanh()
    }

    pub fn omega_a(&self) -> f64 {
        self.delta_a + 0.5 * self.omega_p
    }

    pub fn omega_c(&self) -> f64 {
        DELTA_C + 0.5 * self.omega_p
    }
}

/// `r = atanh(lambda / delta_c) / 2`.
pub fn squeezing_from_lambda(lambda: f64) -> f64 {
    0.5 * (lambda / DELTA_C).atanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Normal,
    Superradiant,
}

/// Squeezed-frame quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Enhanced coupling `g e^r / 2`.
    pub g_tilde: f64,
    /// Effective cavity frequency `delta_c sech 2r`.
    pub omega_c_eff: f64,
    /// Frequency ratio `delta_a / Omega_c`.
    pub eta: f64,
    /// Critical coupling `sqrt(delta_a Omega_c) / 2`.
    pub g_crit: f64,
    pub phase: Phase,
    pub eta_semiclassical: bool,
}

pub fn derive_params(p: &SystemParams) -> DerivedParams {
    let g_tilde = 0.5 * p.g * p.r.exp();
    let omega_c_eff = DELTA_C / (2.0 * p.r).cosh();
    let eta = p.delta_a / DELTA_C * (2.0 * p.r).cosh();
    let g_crit = (p.delta_a * omega_c_eff).sqrt() / 2.0;
    let phase = if g_tilde > g_crit {
        Phase::Superradiant
    } else {
        Phase::Normal
    };
    DerivedParams {
        g_tilde,
        omega_c_eff,
        eta,
        g_crit,
        phase,
        eta_semiclassical: eta > ETA_SEMICLASSICAL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unsqueezed_limit() {
        let p = SystemParams::new(0.3, 0.1, 0.0).unwrap();
        let d = derive_params(&p);
        assert_eq!(d.g_tilde, 0.05);
        assert_eq!(d.omega_c_eff, 1.0);
        assert_eq!(d.eta, 0.3);
    }

    #[test]
    fn deep_superradiant_set() {
        let d = derive_params(&SystemParams::new(0.02, 2e-4, 4.0).unwrap());
        assert!((d.g_tilde - 5.45982e-3).abs() < 1e-8);
        assert!((d.omega_c_eff - 6.70925e-4).abs() < 1e-9);
        assert!((d.eta - 29.8096).abs() < 1e-4);
        assert!((d.g_crit - 1.83156e-3).abs() < 1e-8);
        assert_eq!(d.phase, Phase::Superradiant);
        assert!(d.eta_semiclassical);
    }

    #[test]
    fn normal_phase_set() {
        let d = derive_params(&SystemParams::new(0.02, 2e-4, 1.2).unwrap());
        assert!((d.g_tilde - 3.32012e-4).abs() < 1e-9);
        assert!((d.omega_c_eff - 0.179955).abs() < 1e-6);
        assert!((d.g_crit - 0.029996).abs() < 1e-6);
        assert_eq!(d.phase, Phase::Normal);
        assert!(!d.eta_semiclassical);
    }

    #[test]
    fn lambda_and_r_agree() {
        let p = SystemParams::from_lambda(0.02, 2e-4, 0.5).unwrap();
        assert!((p.lambda() - 0.5).abs() < 1e-15);
        assert!((p.r - 0.5 * 0.5f64.atanh()).abs() < 1e-15);
        assert!(SystemParams::resolve(0.02, 2e-4, Some(p.r), Some(0.5)).is_ok());
        assert!(SystemParams::resolve(0.02, 2e-4, Some(p.r + 1e-6), Some(0.5)).is_err());
        assert!(SystemParams::resolve(0.02, 2e-4, None, None).is_err());
    }

    #[test]
    fn rejects_unphysical_input() {
        assert!(SystemParams::from_lambda(0.02, 2e-4, 1.0).is_err());
        assert!(SystemParams::new(0.02, -1.0, 1.0).is_err());
        assert!(SystemParams::new(0.02, 1.0, -0.1).is_err());
        assert!(SystemParams::new(f64::NAN, 1.0, 0.1).is_err());
    }

    #[test]
    fn lab_frequencies_follow_detunings() {
        let p = SystemParams::new(0.02, 2e-4, 1.0)
            .unwrap()
            .with_drive_frequency(3.0)
            .unwrap();
        assert!((p.omega_a() - p.omega_p / 2.0 - p.delta_a).abs() < 1e-15);
        assert!((p.omega_c() - p.omega_p / 2.0 - p.delta_c()).abs() < 1e-15);
    }

    #[test]
    fn monotone_in_r() {
        let mut prev = derive_params(&SystemParams::new(0.02, 2e-4, 0.0).unwrap());
        for i in 1..=100 {
            let r = 5.0 * i as f64 / 100.0;
            let d = derive_params(&SystemParams::new(0.02, 2e-4, r).unwrap());
            assert!(d.g_tilde > prev.g_tilde);
            assert!(d.omega_c_eff < prev.omega_c_eff);
            assert!(d.eta > prev.eta);
            prev = d;
        }
    }

    #[test]
    fn phase_flips_where_margin_changes_sign() {
        let mut prev: Option<(f64, Phase)> = None;
        for i in 0..=500 {
            let r = 5.0 * i as f64 / 500.0;
            let d = derive_params(&SystemParams::new(0.02, 2e-4, r).unwrap());
            let margin = d.g_tilde - d.g_crit;
            assert_eq!(d.phase == Phase::Superradiant, margin > 0.0);
            if let Some((m0, ph0)) = prev {
                assert_eq!(ph0 != d.phase, (m0 > 0.0) != (margin > 0.0));
            }
            prev = Some((margin, d.phase));
        }
    }
}

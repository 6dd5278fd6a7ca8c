//! Named parameter sets and initial states used by the examples.

use num_complex::Complex64 as c64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::SystemParams;
use crate::quantum::{product_state, FockTruncation, KetState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamPreset {
    pub name: &'static str,
    pub delta_a: f64,
    pub g: f64,
    pub r: f64,
    /// Energy shell of the listed initial points.
    pub energy: f64,
    /// Truncation that holds the listed states with room for the dynamics.
    pub n_max: usize,
}

impl ParamPreset {
    pub fn params(&self) -> SystemParams {
        SystemParams::new(self.delta_a, self.g, self.r).expect("preset parameters are valid")
    }

    pub fn truncation(&self) -> FockTruncation {
        FockTruncation::new(self.n_max).expect("preset truncation is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatePreset {
    pub name: &'static str,
    /// Parameter set the point belongs to, if any.
    pub set: Option<&'static str>,
    pub tau: c64,
    pub beta: c64,
    /// Chaotic or regular region of the mean-field section.
    pub chaotic: Option<bool>,
}

impl StatePreset {
    pub fn state(&self, trunc: FockTruncation) -> Result<KetState> {
        product_state(self.tau, self.beta, trunc)
    }
}

pub const SET_A: ParamPreset = ParamPreset {
    name: "a",
    delta_a: 0.02,
    g: 2e-4,
    r: 4.0,
    energy: 0.018,
    n_max: 400,
};

pub const SET_B: ParamPreset = ParamPreset {
    name: "b",
    delta_a: 0.75,
    g: 0.0375,
    r: 2.0,
    energy: 0.75,
    n_max: 180,
};

pub const PARAM_PRESETS: [ParamPreset; 2] = [SET_A, SET_B];

const fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub const C1: StatePreset = StatePreset {
    name: "C1",
    set: Some("a"),
    tau: c(0.825, 0.0),
    beta: c(0.0, 5.4461),
    chaotic: Some(true),
};

pub const R1: StatePreset = StatePreset {
    name: "R1",
    set: Some("a"),
    tau: c(7.0, 0.0),
    beta: c(0.0, 3.5384),
    chaotic: Some(false),
};

pub const C2: StatePreset = StatePreset {
    name: "C2",
    set: Some("b"),
    tau: c(0.0999, 0.4081),
    beta: c(0.0, 5.3065),
    chaotic: Some(true),
};

pub const R2: StatePreset = StatePreset {
    name: "R2",
    set: Some("b"),
    tau: c(-0.9419, 1.4653),
    beta: c(0.0, 3.9644),
    chaotic: Some(false),
};

/// `|+> ⊗ |0>`, the default OTOC reference state.
pub const PLUS_VACUUM: StatePreset = StatePreset {
    name: "plus_vac",
    set: None,
    tau: c(1.0, 0.0),
    beta: c(0.0, 0.0),
    chaotic: None,
};

pub const STATE_PRESETS: [StatePreset; 5] = [C1, R1, C2, R2, PLUS_VACUUM];

pub fn param_preset(name: &str) -> Result<ParamPreset> {
    PARAM_PRESETS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .copied()
        .ok_or_else(|| Error::InvalidParams(format!("unknown parameter set '{name}'")))
}

pub fn state_preset(name: &str) -> Result<StatePreset> {
    STATE_PRESETS
        .iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
        .copied()
        .ok_or_else(|| Error::InvalidParams(format!("unknown state '{name}'")))
}

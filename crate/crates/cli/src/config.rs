//! Scenario configuration (TOML) and its resolution into typed inputs.

use std::path::{Path, PathBuf};

use chaoslab_core::diagnostics::{HamiltonianChoice, HusimiGridSpec, MapGrid, OtocOperator, DEFAULT_EPSILON};
use chaoslab_core::frames::{derive_params, DerivedParams, SystemParams};
use chaoslab_core::presets::{param_preset, state_preset, ParamPreset};
use chaoslab_core::quantum::{labels_to_phase, phase_to_labels, FockTruncation, PhasePoint};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Poincare,
    Loschmidt,
    FidelityScan,
    Otoc,
    OtocDirect,
    Entropy,
    EntropyMap,
    Recurrence,
    Husimi,
    FrameCheck,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Self::Poincare => "poincare",
            Self::Loschmidt => "loschmidt",
            Self::FidelityScan => "fidelity_scan",
            Self::Otoc => "otoc",
            Self::OtocDirect => "otoc_direct",
            Self::Entropy => "entropy",
            Self::EntropyMap => "entropy_map",
            Self::Recurrence => "recurrence",
            Self::Husimi => "husimi",
            Self::FrameCheck => "frame_check",
        }
    }

    /// Figure the output feeds.
    pub fn lineage(self) -> &'static str {
        match self {
            Self::Poincare => "fig1",
            Self::Loschmidt => "fig2a",
            Self::FidelityScan => "fig2b",
            Self::Otoc | Self::OtocDirect => "fig4a",
            Self::Entropy => "fig5",
            Self::EntropyMap => "fig7",
            Self::Recurrence => "fig6",
            Self::Husimi => "fig8",
            Self::FrameCheck => "frame-equivalence",
        }
    }

    fn default_horizon(self) -> f64 {
        match self {
            Self::Otoc | Self::OtocDirect => 2e4,
            Self::FrameCheck => 100.0,
            Self::Poincare => 1e8,
            _ => 4e5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    /// Named set, `a` or `b`; explicit fields override it.
    pub set: Option<String>,
    pub delta_a: Option<f64>,
    pub g: Option<f64>,
    pub r: Option<f64>,
    pub lambda: Option<f64>,
    pub omega_p: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub preset: Option<String>,
    /// `[re, im]`.
    pub tau: Option<[f64; 2]>,
    pub beta: Option<[f64; 2]>,
    /// `[q1, p1, q2, p2]`.
    pub phase: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: Option<f64>,
    /// Number of uniform intervals on `[0, t_end]`.
    pub intervals: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Per-step integrator tolerance.
    pub integrator: f64,
    /// Relative energy drift allowed along classical trajectories.
    pub drift: f64,
    /// Relative change allowed under `n_max -> 1.5 n_max`.
    pub convergence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            integrator: 1e-12,
            drift: 1e-8,
            convergence: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoincareConfig {
    pub crossings: usize,
    /// Extra `(q1, p1)` seeds placed on the shell of the initial point.
    pub seeds: Vec<[f64; 2]>,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        Self {
            crossings: 500,
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OtocSection {
    pub epsilon: f64,
    pub operator: OtocOperator,
    pub fit_window: Option<[f64; 2]>,
}

impl Default for OtocSection {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            operator: OtocOperator::Quadrature,
            fit_window: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub r_values: Option<Vec<f64>>,
    /// `[r_min, r_max, count]` when `r_values` is absent.
    pub r_range: Option<(f64, f64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropySection {
    pub hamiltonian: HamiltonianChoice,
}

impl Default for EntropySection {
    fn default() -> Self {
        Self {
            hamiltonian: HamiltonianChoice::Eff,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapSection {
    /// Shell energy; defaults to the energy of the initial point.
    pub energy: Option<f64>,
    pub grid: MapGrid,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HusimiSection {
    /// Snapshot time; defaults to `t_end`.
    pub time: Option<f64>,
    pub grid: HusimiGridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameSection {
    pub steps: usize,
    pub min_overlap: f64,
    /// Lab-frame integrator tolerance.
    pub tolerance: f64,
}

impl Default for FrameSection {
    fn default() -> Self {
        Self {
            steps: 100,
            min_overlap: 0.999,
            tolerance: 1e-9,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub n_max: Option<usize>,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Worker threads; 0 or absent uses every available core.
    pub threads: Option<usize>,
    /// Rerun the headline scalars at `1.5 n_max`.
    #[serde(default = "yes")]
    pub convergence_check: bool,
    #[serde(default)]
    pub poincare: PoincareConfig,
    #[serde(default)]
    pub otoc: OtocSection,
    #[serde(default)]
    pub fidelity_scan: ScanConfig,
    #[serde(default)]
    pub entropy: EntropySection,
    #[serde(default)]
    pub entropy_map: MapSection,
    #[serde(default)]
    pub husimi: HusimiSection,
    #[serde(default)]
    pub frame_check: FrameSection,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Initial condition in both label and phase-space form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Initial {
    pub name: Option<&'static str>,
    pub tau: c64,
    pub beta: c64,
    pub phase: PhasePoint,
}

/// Fully resolved inputs of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub scenario: Scenario,
    pub params: SystemParams,
    pub derived: DerivedParams,
    pub initial: Initial,
    pub n_max: usize,
    pub t_end: f64,
    pub intervals: usize,
    pub r_values: Vec<f64>,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn resolve_params(c: &ParamsConfig) -> CliResult<(SystemParams, Option<ParamPreset>)> {
    let preset = c.set.as_deref().map(param_preset).transpose().map_err(config_err)?;
    let delta_a = c.delta_a.or(preset.map(|p| p.delta_a));
    let g = c.g.or(preset.map(|p| p.g));
    let (r, lambda) = match (c.r, c.lambda) {
        (None, None) => (preset.map(|p| p.r), None),
        other => other,
    };
    let (Some(delta_a), Some(g)) = (delta_a, g) else {
        return Err(CliError::Config("params need delta_a and g (or a named set)".into()));
    };
    let mut p = SystemParams::resolve(delta_a, g, r, lambda).map_err(config_err)?;
    if let Some(w) = c.omega_p {
        p = p.with_drive_frequency(w).map_err(config_err)?;
    }
    Ok((p, preset))
}

fn resolve_initial(c: &InitialConfig, scenario: Scenario) -> CliResult<Initial> {
    let forms = [c.preset.is_some(), c.tau.is_some() || c.beta.is_some(), c.phase.is_some()];
    match forms.iter().filter(|x| **x).count() {
        0 if scenario == Scenario::Otoc || scenario == Scenario::OtocDirect => {
            return resolve_initial(
                &InitialConfig {
                    preset: Some("plus_vac".into()),
                    ..Default::default()
                },
                scenario,
            )
        }
        1 => {}
        _ => {
            return Err(CliError::Config(
                "initial needs exactly one of: preset, (tau, beta), phase".into(),
            ))
        }
    }
    if let Some(name) = &c.preset {
        let s = state_preset(name).map_err(config_err)?;
        return Ok(Initial {
            name: Some(s.name),
            tau: s.tau,
            beta: s.beta,
            phase: labels_to_phase(s.tau, s.beta),
        });
    }
    if let Some(ph) = c.phase {
        let pt = PhasePoint::from_array(ph);
        let (tau, beta) = phase_to_labels(&pt).map_err(config_err)?;
        return Ok(Initial {
            name: None,
            tau,
            beta,
            phase: pt,
        });
    }
    let (Some(t), Some(b)) = (c.tau, c.beta) else {
        return Err(CliError::Config("initial labels need both tau and beta".into()));
    };
    let (tau, beta) = (c64::new(t[0], t[1]), c64::new(b[0], b[1]));
    Ok(Initial {
        name: None,
        tau,
        beta,
        phase: labels_to_phase(tau, beta),
    })
}

impl ScenarioConfig {
    /// Applies defaults and checks consistency; any failure is a config error.
    pub fn resolve(&self) -> CliResult<Resolved> {
        let (params, preset) = resolve_params(&self.params)?;
        let initial = resolve_initial(&self.initial, self.scenario)?;
        let n_max = self.n_max.or(preset.map(|p| p.n_max)).unwrap_or(200);
        FockTruncation::new(n_max).map_err(config_err)?;
        let t_end = self.time.t_end.unwrap_or(self.scenario.default_horizon());
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(CliError::Config(format!("t_end must be positive, got {t_end}")));
        }
        let intervals = self.time.intervals.unwrap_or(2000);
        if intervals == 0 {
            return Err(CliError::Config("intervals must be positive".into()));
        }
        let tol = &self.tolerances;
        if ![tol.integrator, tol.drift, tol.convergence].iter().all(|x| *x > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        let r_values = match (&self.fidelity_scan.r_values, self.fidelity_scan.r_range) {
            (Some(v), None) => v.clone(),
            (None, Some((lo, hi, n))) => {
                if n < 2 || !(lo < hi) {
                    return Err(CliError::Config("r_range needs lo < hi and count >= 2".into()));
                }
                (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
            }
            (None, None) => (0..=90).map(|k| 0.05 * k as f64).collect(),
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either r_values or r_range, not both".into()))
            }
        };
        if self.scenario == Scenario::FidelityScan && r_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::Config("r values must be strictly increasing".into()));
        }
        if self.otoc.epsilon <= 0.0 {
            return Err(CliError::Config("otoc.epsilon must be positive".into()));
        }
        self.entropy_map.grid.validate().map_err(config_err)?;
        Ok(Resolved {
            scenario: self.scenario,
            derived: derive_params(&params),
            params,
            initial,
            n_max,
            t_end,
            intervals,
            r_values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let c = ScenarioConfig::from_toml(
            r#"
            scenario = "otoc"
            [params]
            set = "a"
            "#,
        )
        .unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.n_max, 400);
        assert_eq!(r.initial.name, Some("plus_vac"));
        assert_eq!(r.t_end, 2e4);
        assert_eq!(r.params.r, 4.0);
    }

    #[test]
    fn explicit_fields_override_the_set() {
        let c = ScenarioConfig::from_toml(
            r#"
            scenario = "entropy"
            n_max = 50
            [params]
            set = "a"
            r = 1.2
            [initial]
            tau = [0.825, 0.0]
            beta = [0.0, 1.0]
            "#,
        )
        .unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.params.r, 1.2);
        assert_eq!(r.n_max, 50);
        assert!((r.initial.beta.im - 1.0).abs() < 1e-15);
    }

    #[test]
    fn malformed_configs_are_config_errors() {
        for text in [
            "scenario = \"nope\"",
            "scenario = \"otoc\"\nbogus = 1",
            "scenario = \"entropy\"\n[params]\nset = \"a\"\n[initial]\npreset = \"C1\"\nphase = [0,0,0,0]",
            "scenario = \"entropy\"\n[params]\ndelta_a = 0.1",
        ] {
            let err = ScenarioConfig::from_toml(text).and_then(|c| c.resolve().map(|_| ()));
            assert!(matches!(err, Err(CliError::Config(_))), "{text}");
        }
    }
}

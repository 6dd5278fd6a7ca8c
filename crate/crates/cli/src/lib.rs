//! Scenario runner: TOML config in, CSV table and JSON metadata out.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

use std::path::PathBuf;
use std::time::Instant;

use chaoslab_core::presets::{PARAM_PRESETS, STATE_PRESETS};
use serde_json::json;

pub use config::{Resolved, Scenario, ScenarioConfig};
pub use error::{CliError, CliResult};
pub use scenario::{convergence_report, evaluate, ConvergenceReport, Outcome};

/// Files written by a successful run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub warnings: Vec<String>,
    pub convergence: Option<ConvergenceReport>,
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let n = threads.filter(|&n| n > 0).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    Ok(pool.install(f))
}

/// Evaluates the scenario and, only if everything succeeds, writes
/// `<scenario>.csv` and `<scenario>.json` into the output directory.
pub fn run(cfg: &ScenarioConfig) -> CliResult<RunReport> {
    let res = cfg.resolve()?;
    let start = Instant::now();
    let (outcome, convergence) = with_threads(cfg.threads, || -> CliResult<_> {
        let outcome = evaluate(cfg, &res, res.n_max)?;
        let convergence = if cfg.convergence_check {
            Some(convergence_report(cfg, &res, &outcome)?)
        } else {
            None
        };
        Ok((outcome, convergence))
    })??;
    let mut warnings = outcome.warnings.clone();
    if let Some(c) = convergence.as_ref().filter(|c| !c.within_threshold) {
        warnings.push(format!(
            "headline scalars changed by {:.3e} under n_max {} -> {} (threshold {:.0e})",
            c.max_rel_change, c.n_max, c.n_max_high, c.threshold
        ));
    }
    let name = res.scenario.name();
    let csv_name = format!("{name}.csv");
    let json_name = format!("{name}.json");
    let metadata = json!({
        "tool": "chaoslab",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": name,
        "lineage": res.scenario.lineage(),
        "config": cfg,
        "resolved": res,
        "results": outcome.summary,
        "convergence": convergence,
        "warnings": warnings,
        "outputs": [csv_name.clone()],
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    let files = vec![
        (csv_name, outcome.table.to_csv()?),
        (json_name, output::to_json_bytes(&metadata)?),
    ];
    let written = output::write_all(&cfg.output_dir, &files)?;
    Ok(RunReport {
        csv: written[0].clone(),
        metadata: written[1].clone(),
        warnings,
        convergence,
    })
}

/// Headline scalars at `n_max` and `1.5 n_max`, without writing files.
pub fn converge(cfg: &ScenarioConfig) -> CliResult<ConvergenceReport> {
    let res = cfg.resolve()?;
    with_threads(cfg.threads, || {
        let base = evaluate(cfg, &res, res.n_max)?;
        convergence_report(cfg, &res, &base)
    })?
}

/// Human-readable listing of the named parameter sets and initial states.
pub fn presets_text() -> String {
    let mut out = String::from("Parameter sets (units of delta_c):\n");
    for p in PARAM_PRESETS {
        out += &format!(
            "  {:<2} delta_a = {:<6} g = {:<7} r = {:<4} E = {:<6} n_max = {}  (source: fig1 caption, set ({}))\n",
            p.name, p.delta_a, p.g, p.r, p.energy, p.n_max, p.name
        );
    }
    out += "Initial states (tau, beta):\n";
    for s in STATE_PRESETS {
        let set = s.set.map_or("-".to_string(), |x| format!("({x})"));
        let source = if s.set.is_some() { "fig1 caption" } else { "OTOC reference state" };
        out += &format!(
            "  {:<8} set {:<3} tau = {:+.4}{:+.4}i  beta = {:+.4}{:+.4}i  (source: {source})\n",
            s.name, set, s.tau.re, s.tau.im, s.beta.re, s.beta.im
        );
    }
    out
}

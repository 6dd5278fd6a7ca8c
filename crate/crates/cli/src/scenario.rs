//! Dispatch from a resolved configuration to the library computations.

use chaoslab_core::diagnostics::{
    default_fit_window, entropy_map, entropy_series_with, fidelity_vs_r_scan, husimi_snapshot, loschmidt_echo,
    lyapunov_fit, otoc_direct_with, otoc_epsilon_check, recurrence, revival_peak, scrambling_time, time_averaged_entropy,
    uniform_times, variance_with, CellStatus, HamiltonianChoice, OtocConfig, OtocOperator, AVERAGE_REL_TOL,
    COLLAPSE_LEVEL, ENTROPY_MAX,
};
use chaoslab_core::frames::verify_frame_equivalence;
use chaoslab_core::quantum::{product_state, FockTruncation, KetState, PhasePoint};
use chaoslab_core::semiclassical::{
    classical_energy, closed_curve_statistic, poincare_section, section_scan, PoincareSection,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Resolved, Scenario, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

/// Result of one scenario evaluation at a fixed truncation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub summary: Value,
    /// Scalars compared by the truncation convergence report.
    pub headline: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

fn initial_state(res: &Resolved, trunc: FockTruncation) -> CliResult<KetState> {
    Ok(product_state(res.initial.tau, res.initial.beta, trunc)?)
}

fn series_table(name: &str, headers: &[&str], columns: &[&[f64]]) -> Table {
    let mut t = Table::new(name, headers);
    for i in 0..columns[0].len() {
        t.push(columns.iter().map(|c| Cell::Num(c[i])).collect());
    }
    t
}

fn check_unit_interval(label: &str, values: &[f64]) -> CliResult<()> {
    if let Some(v) = values.iter().find(|v| !(-1e-12..=1.0 + 1e-12).contains(*v)) {
        return Err(CliError::NonConvergence(format!("{label} value {v} left [0, 1]")));
    }
    Ok(())
}

pub fn evaluate(cfg: &ScenarioConfig, res: &Resolved, n_max: usize) -> CliResult<Outcome> {
    let trunc = FockTruncation::new(n_max)?;
    let p = &res.params;
    let times = || uniform_times(res.t_end, res.intervals);
    let mut warnings = Vec::new();
    let outcome = match res.scenario {
        Scenario::Poincare => return poincare(cfg, res),
        Scenario::Loschmidt => {
            let ts = times();
            let l = loschmidt_echo(p, &initial_state(res, trunc)?, &ts)?;
            check_unit_interval("echo", &l.values)?;
            let mean = l.time_average()?;
            Outcome {
                table: series_table("loschmidt", &["t", "echo"], &[&ts, &l.values]),
                summary: json!({ "time_average": mean, "min": l.min() }),
                headline: vec![("time_average_echo".into(), mean)],
                warnings,
            }
        }
        Scenario::FidelityScan => {
            let s = fidelity_vs_r_scan(p, res.initial.tau, res.initial.beta, trunc, res.t_end, &res.r_values)?;
            check_unit_interval("fidelity", &s.values)?;
            let decreases = s.values.windows(2).filter(|w| w[1] < w[0]).count();
            Outcome {
                table: series_table("fidelity_scan", &["r", "fidelity"], &[&s.times, &s.values]),
                summary: json!({ "horizon": res.t_end, "local_decreases": decreases, "max": s.max() }),
                headline: s
                    .times
                    .iter()
                    .zip(&s.values)
                    .map(|(r, v)| (format!("fidelity_at_r_{r}"), *v))
                    .collect(),
                warnings,
            }
        }
        Scenario::Otoc => {
            let ts = times();
            let psi = initial_state(res, trunc)?;
            let prop = HamiltonianChoice::Eff.propagator(p, trunc)?;
            let var = variance_with(&prop, &psi, &ts, cfg.otoc.operator)?;
            let star = scrambling_time(&var)?;
            if star.at_horizon {
                warnings.push("variance still rising at the horizon; t* is a lower bound".into());
            }
            let (window, window_source) = match cfg.otoc.fit_window {
                Some([lo, hi]) => ((lo, hi), "config"),
                None => (default_fit_window(star.t_star), "default [0.05 t*, 0.8 t*]"),
            };
            let fit = match lyapunov_fit(&var, window) {
                Ok(f) => {
                    if !f.reliable {
                        warnings.push(format!("Lyapunov fit unreliable (R^2 = {:.3})", f.r_squared));
                    }
                    serde_json::to_value(f)?
                }
                Err(e) => {
                    warnings.push(format!("Lyapunov fit skipped: {e}"));
                    Value::Null
                }
            };
            Outcome {
                table: series_table("otoc", &["t", "var_G"], &[&ts, &var.values]),
                summary: json!({
                    "t_star": star.t_star,
                    "max_variance": star.value,
                    "at_horizon": star.at_horizon,
                    "fit_window_source": window_source,
                    "lyapunov_fit": fit,
                }),
                headline: vec![("max_variance".into(), star.value), ("t_star".into(), star.t_star)],
                warnings,
            }
        }
        Scenario::OtocDirect => {
            let ts = times();
            let psi = initial_state(res, trunc)?;
            let prop = HamiltonianChoice::Eff.propagator(p, trunc)?;
            let oc = OtocConfig {
                epsilon: cfg.otoc.epsilon,
                times: ts.clone(),
                operator: cfg.otoc.operator,
            };
            let d = otoc_direct_with(&prop, &psi, &oc)?;
            check_unit_interval("OTOC", &d.fidelity.values)?;
            warnings.extend(d.warning.clone());
            let consistency = if cfg.otoc.operator == OtocOperator::Quadrature {
                serde_json::to_value(otoc_epsilon_check(&prop, &psi, &ts, cfg.otoc.epsilon)?)?
            } else {
                Value::Null
            };
            let peak = d.scaled_deficit.iter().copied().fold(0.0, f64::max);
            Outcome {
                table: series_table(
                    "otoc_direct",
                    &["t", "F", "scaled_deficit", "var_G"],
                    &[&ts, &d.fidelity.values, &d.scaled_deficit, &d.variance],
                ),
                summary: json!({ "epsilon": d.epsilon, "max_scaled_deficit": peak, "epsilon_consistency": consistency }),
                headline: vec![("max_scaled_deficit".into(), peak)],
                warnings,
            }
        }
        Scenario::Entropy => {
            let ts = times();
            let psi = initial_state(res, trunc)?;
            let prop = cfg.entropy.hamiltonian.propagator(p, trunc)?;
            let s = entropy_series_with(&prop, &psi, &ts)?;
            if let Some(v) = s.values.iter().find(|v| !(-1e-12..=ENTROPY_MAX + 1e-12).contains(*v)) {
                return Err(CliError::NonConvergence(format!("entropy {v} outside [0, 1/2]")));
            }
            let avg = time_averaged_entropy(&prop, &psi, res.t_end, res.intervals, AVERAGE_REL_TOL)?;
            Outcome {
                table: series_table("entropy", &["t", "S"], &[&ts, &s.values]),
                summary: json!({
                    "hamiltonian": cfg.entropy.hamiltonian,
                    "average": avg.value,
                    "average_intervals": avg.intervals,
                    "refinement": avg.history,
                }),
                headline: vec![("average_entropy".into(), avg.value)],
                warnings,
            }
        }
        Scenario::EntropyMap => {
            let energy = match cfg.entropy_map.energy {
                Some(e) => e,
                None => classical_energy(&res.initial.phase, p)?,
            };
            let map = entropy_map(p, energy, &cfg.entropy_map.grid, res.t_end, res.intervals, trunc)?;
            let mut t = Table::new("entropy_map", &["q1", "p1", "p2", "S_bar", "status"]);
            for c in &map.cells {
                let status = serde_json::to_value(c.status)?;
                t.push(vec![
                    c.q1.into(),
                    c.p1.into(),
                    c.p2.into(),
                    c.value.into(),
                    status.as_str().unwrap_or_default().into(),
                ]);
            }
            let count = |s: CellStatus| map.cells.iter().filter(|c| c.status == s).count();
            let mean = map.mean_where(|_| true).unwrap_or(f64::NAN);
            Outcome {
                table: t,
                summary: json!({
                    "energy": energy,
                    "grid": map.grid,
                    "computed_cells": count(CellStatus::Computed),
                    "masked_outside_bloch": count(CellStatus::OutsideBloch),
                    "masked_off_shell": count(CellStatus::OffShell),
                    "masked_truncation": count(CellStatus::Truncation),
                    "mean_average_entropy": mean,
                }),
                headline: vec![("mean_average_entropy".into(), mean)],
                warnings,
            }
        }
        Scenario::Recurrence => {
            let ts = times();
            let r = recurrence(&initial_state(res, trunc)?, p, &ts)?;
            check_unit_interval("recurrence", &r.values)?;
            let peak = revival_peak(&r, COLLAPSE_LEVEL).unwrap_or(f64::NAN);
            Outcome {
                table: series_table("recurrence", &["t", "P"], &[&ts, &r.values]),
                summary: json!({ "collapse_level": COLLAPSE_LEVEL, "revival_peak": peak }),
                headline: vec![("max_revival".into(), peak)],
                warnings,
            }
        }
        Scenario::Husimi => {
            let t = cfg.husimi.time.unwrap_or(res.t_end);
            let h = husimi_snapshot(p, &initial_state(res, trunc)?, t, &cfg.husimi.grid)?;
            let mut table = Table::new("husimi", &["re_beta", "im_beta", "Q"]);
            for (row, &im) in h.q_values.iter().zip(&h.im_beta_axis) {
                for (&q, &re) in row.iter().zip(&h.re_beta_axis) {
                    table.push(vec![re.into(), im.into(), q.into()]);
                }
            }
            let spread = h.spread();
            let (mx, my) = h.mean();
            Outcome {
                table,
                summary: json!({
                    "snapshot_time": t,
                    "normalization": h.normalization,
                    "mean": [mx, my],
                    "spread": spread,
                    "grid_points": [h.re_beta_axis.len(), h.im_beta_axis.len()],
                }),
                headline: vec![("spread".into(), spread)],
                warnings,
            }
        }
        Scenario::FrameCheck => {
            let fc = &cfg.frame_check;
            let eq = verify_frame_equivalence(p, &initial_state(res, trunc)?, res.t_end, fc.steps, fc.tolerance)?;
            let min = eq.min_overlap();
            if min < fc.min_overlap {
                return Err(CliError::NonConvergence(format!(
                    "frame overlap dropped to {min:.6} (required {})",
                    fc.min_overlap
                )));
            }
            Outcome {
                table: series_table("frame_check", &["t", "overlap"], &[&eq.times, &eq.overlaps]),
                summary: json!({ "min_overlap": min, "initial_norm_loss": eq.initial_norm_loss }),
                headline: vec![("min_overlap".into(), min)],
                warnings,
            }
        }
    };
    Ok(outcome)
}

#[derive(Debug, Serialize)]
struct SectionSummary {
    seed: PhasePoint,
    energy: f64,
    crossings: usize,
    energy_drift: f64,
    closed_curve: Option<chaoslab_core::semiclassical::CurveStatistic>,
}

fn summarize(s: &PoincareSection) -> SectionSummary {
    SectionSummary {
        seed: s.seed,
        energy: s.energy,
        crossings: s.crossings.len(),
        energy_drift: s.energy_drift,
        closed_curve: closed_curve_statistic(&s.points()).ok(),
    }
}

fn poincare(cfg: &ScenarioConfig, res: &Resolved) -> CliResult<Outcome> {
    let p = &res.params;
    let pc = &cfg.poincare;
    let tol = cfg.tolerances.integrator;
    let energy = classical_energy(&res.initial.phase, p)?;
    let mut sections = vec![poincare_section(&res.initial.phase, p, pc.crossings, res.t_end, tol)?];
    let mut warnings = Vec::new();
    if !pc.seeds.is_empty() {
        let seeds: Vec<(f64, f64)> = pc.seeds.iter().map(|s| (s[0], s[1])).collect();
        let scan = section_scan(&seeds, p, energy, pc.crossings, res.t_end, tol)?;
        if !scan.skipped.is_empty() {
            warnings.push(format!("seeds off the energy shell: {:?}", scan.skipped));
        }
        sections.extend(scan.sections.into_iter().map(|s| s.section));
    }
    let mut table = Table::new("poincare", &["seed", "t", "q1", "p1", "q2", "p2"]);
    for (i, s) in sections.iter().enumerate() {
        if s.energy_drift > cfg.tolerances.drift {
            return Err(CliError::NonConvergence(format!(
                "seed {i}: relative energy drift {:.3e} exceeds {:.1e}",
                s.energy_drift, cfg.tolerances.drift
            )));
        }
        if s.crossings.len() < pc.crossings {
            warnings.push(format!(
                "seed {i}: {} of {} crossings before t = {}",
                s.crossings.len(),
                pc.crossings,
                s.t_final
            ));
        }
        for c in &s.crossings {
            table.push(vec![i.into(), c.t.into(), c.q1.into(), c.p1.into(), c.q2.into(), c.p2.into()]);
        }
    }
    let summaries: Vec<SectionSummary> = sections.iter().map(summarize).collect();
    Ok(Outcome {
        table,
        summary: json!({ "energy": energy, "sections": summaries }),
        headline: Vec::new(),
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceEntry {
    pub name: String,
    pub base: f64,
    pub high: f64,
    pub rel_change: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub applicable: bool,
    pub n_max: usize,
    pub n_max_high: usize,
    pub entries: Vec<ConvergenceEntry>,
    pub max_rel_change: f64,
    pub threshold: f64,
    pub within_threshold: bool,
}

pub fn high_truncation(n_max: usize) -> usize {
    (3 * n_max).div_ceil(2)
}

/// Compares the headline scalars of `base` with a rerun at `1.5 n_max`.
pub fn convergence_report(cfg: &ScenarioConfig, res: &Resolved, base: &Outcome) -> CliResult<ConvergenceReport> {
    let n_high = high_truncation(res.n_max);
    let threshold = cfg.tolerances.convergence;
    if base.headline.is_empty() {
        return Ok(ConvergenceReport {
            applicable: false,
            n_max: res.n_max,
            n_max_high: n_high,
            entries: Vec::new(),
            max_rel_change: 0.0,
            threshold,
            within_threshold: true,
        });
    }
    let high = evaluate(cfg, res, n_high)?;
    let entries: Vec<ConvergenceEntry> = base
        .headline
        .iter()
        .zip(&high.headline)
        .map(|((name, a), (_, b))| ConvergenceEntry {
            name: name.clone(),
            base: *a,
            high: *b,
            rel_change: relative_change(*a, *b),
        })
        .collect();
    let max_rel_change = entries.iter().map(|e| e.rel_change).fold(0.0, f64::max);
    Ok(ConvergenceReport {
        applicable: true,
        n_max: res.n_max,
        n_max_high: n_high,
        within_threshold: max_rel_change <= threshold,
        entries,
        max_rel_change,
        threshold,
    })
}

pub fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs() / a.abs().max(b.abs())
    }
}

use rayon::prelude::*;
use serde::Serialize;

use super::classical::{from_sphere, solve_p2_on_shell};
use super::dynamics::run_flow;
use crate::error::{Error, Result};
use crate::frames::SystemParams;
use crate::ode::Control;
use crate::quantum::PhasePoint;

/// Refinement target for `|q2|` at a recorded crossing.
pub const CROSSING_TOL: f64 = 1e-10;
/// A portrait counts as a closed curve when its angular tour is at most this
/// multiple of its convex-hull perimeter.
pub const CLOSED_CURVE_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub t: f64,
    pub q1: f64,
    pub p1: f64,
    pub q2: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareSection {
    pub seed: PhasePoint,
    pub params: SystemParams,
    /// Energy of the seed.
    pub energy: f64,
    pub crossings: Vec<Crossing>,
    pub energy_drift: f64,
    /// Time reached by the integration.
    pub t_final: f64,
}

impl PoincareSection {
    /// No crossing was found before `t_max`.
    pub fn is_empty(&self) -> bool {
        self.crossings.is_empty()
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.crossings.iter().map(|c| (c.q1, c.p1)).collect()
    }
}

/// Records `(q1, p1)` each time the trajectory crosses `q2 = 0` with
/// `p2 > 0`, until `max_crossings` are found or `t_max` is reached.
pub fn poincare_section(
    pt0: &PhasePoint,
    p: &SystemParams,
    max_crossings: usize,
    t_max: f64,
    tol: f64,
) -> Result<PoincareSection> {
    let mut crossings = Vec::new();
    let (t_final, drift) = run_flow(pt0, p, t_max, tol, |step| {
        let (a, b) = (step.y_old()[3], step.y()[3]);
        let sign_change = (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0);
        if !sign_change {
            return Control::Continue;
        }
        let (mut lo, mut hi) = (step.t_old(), step.t());
        let (mut q_lo, mut y) = (a, step.y().to_vec());
        let mut t_c = hi;
        for _ in 0..200 {
            if y[3].abs() < CROSSING_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let ym = step.eval(mid);
            if (ym[3] < 0.0) == (q_lo < 0.0) {
                lo = mid;
                q_lo = ym[3];
            } else {
                hi = mid;
            }
            t_c = mid;
            y = ym;
        }
        if y[4] > 0.0 {
            let pt = from_sphere(&y);
            crossings.push(Crossing {
                t: t_c,
                q1: pt.q1,
                p1: pt.p1,
                q2: pt.q2,
                p2: pt.p2,
            });
        }
        if crossings.len() >= max_crossings {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    let energy = super::classical::ClassicalModel::new(p).energy_unchecked(&pt0.to_array());
    Ok(PoincareSection {
        seed: *pt0,
        params: *p,
        energy,
        crossings,
        energy_drift: drift.worst,
        t_final,
    })
}

/// Ring test for section portraits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveStatistic {
    /// Length of the closed tour visiting the points in angular order.
    pub tour_length: f64,
    pub hull_perimeter: f64,
    /// `tour_length / hull_perimeter`.
    pub ratio: f64,
    pub closed_curve: bool,
}

fn hull_perimeter(points: &[(f64, f64)]) -> f64 {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            (a.0 - b.0).hypot(a.1 - b.1)
        })
        .sum()
}

/// Visits the points in angular order about their centroid and compares the
/// tour length with the convex-hull perimeter. Points on a closed curve give
/// a ratio near 1; a scattered cloud gives a ratio that grows with the count.
pub fn closed_curve_statistic(points: &[(f64, f64)]) -> Result<CurveStatistic> {
    if points.len() < 3 {
        return Err(Error::InvalidSeries(format!(
            "need at least 3 crossings, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| (a.1 - cy).atan2(a.0 - cx).total_cmp(&(b.1 - cy).atan2(b.0 - cx)));
    let tour_length: f64 = (0..sorted.len())
        .map(|i| {
            let a = sorted[i];
            let b = sorted[(i + 1) % sorted.len()];
            (a.0 - b.0).hypot(a.1 - b.1)
        })
        .sum();
    let hull = hull_perimeter(points);
    let ratio = if hull > 0.0 { tour_length / hull } else { f64::INFINITY };
    Ok(CurveStatistic {
        tour_length,
        hull_perimeter: hull,
        ratio,
        closed_curve: ratio <= CLOSED_CURVE_RATIO,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedSection {
    pub seed_index: usize,
    pub section: PoincareSection,
}

/// Sections of several seeds on one energy shell.
#[derive(Debug, Clone, Serialize)]
pub struct SectionScan {
    pub energy: f64,
    pub sections: Vec<SeedSection>,
    /// Seeds without a point on the shell.
    pub skipped: Vec<usize>,
}

impl SectionScan {
    /// All crossings tagged with their seed index, in seed order.
    pub fn merged(&self) -> Vec<(usize, Crossing)> {
        self.sections
            .iter()
            .flat_map(|s| s.section.crossings.iter().map(move |c| (s.seed_index, *c)))
            .collect()
    }
}

/// Places each `(q1, p1)` seed on the shell `H = energy` (with `q2 = 0`,
/// `p2 > 0`) and collects its section. Seeds run in parallel; results keep
/// seed order.
pub fn section_scan(
    seeds: &[(f64, f64)],
    p: &SystemParams,
    energy: f64,
    crossings_per_seed: usize,
    t_max: f64,
    tol: f64,
) -> Result<SectionScan> {
    let placed: Vec<(usize, Option<PhasePoint>)> = seeds
        .iter()
        .enumerate()
        .map(|(i, &(q1, p1))| {
            let pt = solve_p2_on_shell(q1, p1, energy, p)
                .map(|root| PhasePoint::new(q1, p1, 0.0, root.p2))
                .filter(|pt| super::dynamics::check_start(pt).is_ok());
            (i, pt)
        })
        .collect();
    let skipped: Vec<usize> = placed.iter().filter(|(_, pt)| pt.is_none()).map(|(i, _)| *i).collect();
    if skipped.len() == seeds.len() {
        return Err(Error::EmptyRegion(format!(
            "none of {} seeds reaches the energy shell E = {energy}",
            seeds.len()
        )));
    }
    let sections = placed
        .par_iter()
        .filter_map(|(i, pt)| pt.map(|pt| (*i, pt)))
        .map(|(i, pt)| {
            poincare_section(&pt, p, crossings_per_seed, t_max, tol).map(|section| SeedSection {
                seed_index: i,
                section,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SectionScan {
        energy,
        sections,
        skipped,
    })
}

/// Ring-plus-radial seed lattice in the `(q1, p1)` disk of radius `r_max`.
pub fn default_seeds(n_rings: usize, n_angles: usize, r_max: f64) -> Vec<(f64, f64)> {
    let mut seeds = vec![(0.0, 0.0)];
    for k in 1..=n_rings {
        let r = r_max * k as f64 / n_rings as f64;
        for j in 0..n_angles {
            let a = std::f64::consts::TAU * j as f64 / n_angles as f64;
            seeds.push((r * a.cos(), r * a.sin()));
        }
    }
    seeds
}

use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::echo::{truncation_of, HamiltonianChoice};
use crate::error::{Error, Result};
use crate::frames::SystemParams;
use crate::quantum::KetState;

pub const DEFAULT_HUSIMI_POINTS: usize = 201;
/// Allowed deviation of the grid sum of `Q dA` from 1.
pub const HUSIMI_NORM_TOL: f64 = 0.05;
/// Photon-number mass ignored when estimating the support radius.
const SUPPORT_TAIL: f64 = 1e-6;
/// Distance kept beyond the outermost Fock shell, in units of `|beta|`.
const SUPPORT_PAD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HusimiGridSpec {
    /// Square grid centred on the origin, sized from the photon distribution.
    Auto { points: usize },
    Explicit {
        re_range: (f64, f64),
        im_range: (f64, f64),
        n_re: usize,
        n_im: usize,
    },
}

impl Default for HusimiGridSpec {
    fn default() -> Self {
        Self::Auto {
            points: DEFAULT_HUSIMI_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HusimiGrid {
    pub re_beta_axis: Vec<f64>,
    pub im_beta_axis: Vec<f64>,
    /// `q_values[i_im][i_re]`.
    pub q_values: Vec<Vec<f64>>,
    pub snapshot_time: f64,
    /// Grid sum of `Q dA`.
    pub normalization: f64,
}

impl HusimiGrid {
    fn cell_area(&self) -> f64 {
        step(&self.re_beta_axis) * step(&self.im_beta_axis)
    }

    /// `(Re beta, Im beta)` of the Q-weighted mean.
    pub fn mean(&self) -> (f64, f64) {
        let mut w = 0.0;
        let (mut x, mut y) = (0.0, 0.0);
        for (row, &im) in self.q_values.iter().zip(&self.im_beta_axis) {
            for (&q, &re) in row.iter().zip(&self.re_beta_axis) {
                w += q;
                x += q * re;
                y += q * im;
            }
        }
        (x / w, y / w)
    }

    /// Second moment of `Q` about its mean, `<|beta - <beta>|^2>_Q`.
    pub fn spread(&self) -> f64 {
        let (mx, my) = self.mean();
        let mut w = 0.0;
        let mut s = 0.0;
        for (row, &im) in self.q_values.iter().zip(&self.im_beta_axis) {
            for (&q, &re) in row.iter().zip(&self.re_beta_axis) {
                w += q;
                s += q * ((re - mx).powi(2) + (im - my).powi(2));
            }
        }
        s / w
    }

    /// Largest value and its location `(Re beta, Im beta)`.
    pub fn peak(&self) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for (row, &im) in self.q_values.iter().zip(&self.im_beta_axis) {
            for (&q, &re) in row.iter().zip(&self.re_beta_axis) {
                if q > best.0 {
                    best = (q, re, im);
                }
            }
        }
        best
    }

    pub fn total(&self) -> f64 {
        self.q_values.iter().flatten().sum::<f64>() * self.cell_area()
    }
}

fn step(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        1.0
    } else {
        axis[1] - axis[0]
    }
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1).max(1) as f64)
        .collect()
}

/// `sqrt(n_sup) + 3`, where `n_sup` holds all but [`SUPPORT_TAIL`] of the
/// photon-number distribution.
pub fn support_radius(psi: &[c64]) -> f64 {
    let d = psi.len() / 2;
    let mut cum = 0.0;
    let total: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let mut n_sup = d - 1;
    for n in 0..d {
        cum += psi[n].norm_sqr() + psi[d + n].norm_sqr();
        if cum >= (1.0 - SUPPORT_TAIL) * total {
            n_sup = n;
            break;
        }
    }
    (n_sup as f64).sqrt() + SUPPORT_PAD
}

/// `Q(beta) = (1/pi) sum_s |<beta|psi_s>|^2`, the Husimi function of the
/// cavity reduced state of a pure joint state.
pub fn husimi_of_state(psi: &KetState, spec: &HusimiGridSpec, snapshot_time: f64) -> Result<HusimiGrid> {
    let amps = psi.amplitudes();
    let d = amps.len() / 2;
    let (re_axis, im_axis) = match *spec {
        HusimiGridSpec::Auto { points } => {
            if points < 2 {
                return Err(Error::InvalidParams("Husimi grid needs at least 2 points".into()));
            }
            let w = support_radius(amps);
            (linspace((-w, w), points), linspace((-w, w), points))
        }
        HusimiGridSpec::Explicit {
            re_range,
            im_range,
            n_re,
            n_im,
        } => {
            if n_re < 2 || n_im < 2 || !(re_range.0 < re_range.1) || !(im_range.0 < im_range.1) {
                return Err(Error::InvalidParams(format!("degenerate Husimi grid {spec:?}")));
            }
            (linspace(re_range, n_re), linspace(im_range, n_im))
        }
    };
    let (g, e) = amps.split_at(d);
    let q_values: Vec<Vec<f64>> = im_axis
        .par_iter()
        .map(|&im| {
            re_axis
                .iter()
                .map(|&re| {
                    let beta = c64::new(re, im);
                    // <n|beta> by recursion from exp(-|beta|^2 / 2).
                    let mut c = c64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
                    let (mut ag, mut ae) = (c64::new(0.0, 0.0), c64::new(0.0, 0.0));
                    for n in 0..d {
                        if n > 0 {
                            c = c * beta / (n as f64).sqrt();
                        }
                        let cc = c.conj();
                        ag += cc * g[n];
                        ae += cc * e[n];
                    }
                    (ag.norm_sqr() + ae.norm_sqr()) / std::f64::consts::PI
                })
                .collect()
        })
        .collect();
    let mut grid = HusimiGrid {
        re_beta_axis: re_axis,
        im_beta_axis: im_axis,
        q_values,
        snapshot_time,
        normalization: 0.0,
    };
    grid.normalization = grid.total();
    if (grid.normalization - 1.0).abs() > HUSIMI_NORM_TOL {
        return Err(Error::ToleranceNotMet(format!(
            "Husimi grid sum {:.4} deviates from 1 by more than {HUSIMI_NORM_TOL}; grid too small or too coarse",
            grid.normalization
        )));
    }
    Ok(grid)
}

/// Husimi function of the cavity after evolving `psi0` under `H_eff` to `t`.
pub fn husimi_snapshot(p: &SystemParams, psi0: &KetState, t: f64, spec: &HusimiGridSpec) -> Result<HusimiGrid> {
    let prop = HamiltonianChoice::Eff.propagator(p, truncation_of(psi0)?)?;
    let psi = prop.evolve(psi0, t)?;
    husimi_of_state(&psi, spec, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{product_state, FockTruncation};
    use std::f64::consts::PI;

    #[test]
    fn vacuum_husimi_is_gaussian() {
        let psi = product_state(c64::new(0.0, 0.0), c64::new(0.0, 0.0), FockTruncation::new(20).unwrap()).unwrap();
        let grid = husimi_of_state(&psi, &HusimiGridSpec::default(), 0.0).unwrap();
        let mid = DEFAULT_HUSIMI_POINTS / 2;
        assert!((grid.q_values[mid][mid] - 1.0 / PI).abs() < 1e-12);
        for (row, &im) in grid.q_values.iter().zip(&grid.im_beta_axis).step_by(17) {
            for (&q, &re) in row.iter().zip(&grid.re_beta_axis).step_by(13) {
                assert!((q - (-(re * re + im * im)).exp() / PI).abs() < 1e-12);
            }
        }
        assert!((grid.normalization - 1.0).abs() < HUSIMI_NORM_TOL);
        assert!(grid.q_values.iter().flatten().all(|&q| q >= -1e-12));
    }

    #[test]
    fn coherent_state_peaks_at_its_label() {
        let b0 = c64::new(1.5, -2.0);
        let psi = product_state(c64::new(0.5, 0.0), b0, FockTruncation::new(60).unwrap()).unwrap();
        let spec = HusimiGridSpec::Explicit {
            re_range: (-5.0, 5.0),
            im_range: (-5.0, 5.0),
            n_re: 101,
            n_im: 101,
        };
        let grid = husimi_of_state(&psi, &spec, 0.0).unwrap();
        let (q, re, im) = grid.peak();
        assert!((re - 1.5).abs() < 1e-9 && (im + 2.0).abs() < 1e-9);
        assert!((q - 1.0 / PI).abs() < 1e-10);
        let (mx, my) = grid.mean();
        assert!((mx - 1.5).abs() < 1e-3 && (my + 2.0).abs() < 1e-3);
        assert!((grid.spread() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn undersized_grid_is_rejected() {
        let psi = product_state(c64::new(0.0, 0.0), c64::new(3.0, 0.0), FockTruncation::new(60).unwrap()).unwrap();
        let spec = HusimiGridSpec::Explicit {
            re_range: (-1.0, 1.0),
            im_range: (-1.0, 1.0),
            n_re: 21,
            n_im: 21,
        };
        assert!(matches!(husimi_of_state(&psi, &spec, 0.0), Err(Error::ToleranceNotMet(_))));
    }

    #[test]
    fn snapshot_stays_normalized() {
        let p = SystemParams::new(0.3, 0.15, 0.8).unwrap();
        let psi = product_state(c64::new(1.0, 0.0), c64::new(0.0, 1.5), FockTruncation::new(50).unwrap()).unwrap();
        let grid = husimi_snapshot(&p, &psi, 40.0, &HusimiGridSpec::Auto { points: 81 }).unwrap();
        assert!((grid.normalization - 1.0).abs() < HUSIMI_NORM_TOL);
        assert_eq!(grid.snapshot_time, 40.0);
    }
}

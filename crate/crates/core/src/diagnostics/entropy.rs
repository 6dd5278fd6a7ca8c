use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::echo::{truncation_of, HamiltonianChoice};
use super::series::{check_increasing, trapezoid, uniform_times, TimeSeries};
use crate::error::{Error, Result};
use crate::frames::SystemParams;
use crate::propagation::{diagonalize, SpectralPropagator};
use crate::quantum::{
    phase_to_labels, product_state, reduced_qubit, DensityMatrix, FockTruncation, KetState, PhasePoint,
    BLOCH_RADIUS2,
};
use crate::semiclassical::solve_p2_on_shell;

/// Upper bound of the qubit linear entropy.
pub const ENTROPY_MAX: f64 = 0.5;
pub const DEFAULT_INTERVALS: usize = 2000;
pub const AVERAGE_REL_TOL: f64 = 1e-4;
pub const MAX_DOUBLINGS: usize = 6;

fn entropy_of_reduced(r: [[c64; 2]; 2]) -> f64 {
    let purity = r[0][0].re.powi(2) + r[1][1].re.powi(2) + 2.0 * r[0][1].norm_sqr();
    1.0 - purity
}

/// `1 - Tr(rho_1^2)` of the qubit reduced state.
pub fn linear_entropy(rho: &DensityMatrix) -> Result<f64> {
    let q = rho.partial_trace_cavity()?;
    Ok(1.0 - q.purity())
}

/// Qubit linear entropy of a pure joint state.
pub fn linear_entropy_ket(psi: &KetState) -> f64 {
    entropy_of_reduced(psi.reduced_qubit())
}

pub fn entropy_series(
    p: &SystemParams,
    psi0: &KetState,
    times: &[f64],
    choice: HamiltonianChoice,
) -> Result<TimeSeries> {
    check_increasing(times)?;
    let prop = choice.propagator(p, truncation_of(psi0)?)?;
    entropy_series_with(&prop, psi0, times)
}

pub fn entropy_series_with(prop: &SpectralPropagator, psi0: &KetState, times: &[f64]) -> Result<TimeSeries> {
    let ev = prop.prepare(psi0)?;
    let mut values = Vec::with_capacity(times.len());
    ev.for_each(times, |_, _, psi| values.push(entropy_of_reduced(reduced_qubit(psi))));
    TimeSeries::new("linear_entropy", times.to_vec(), values)
}

/// Trapezoidal `(1/T) int_0^T S dt`; the series must start at 0 and end at `T`.
pub fn average_entropy(series: &TimeSeries, t_end: f64) -> Result<f64> {
    if !(t_end > 0.0) || series.len() < 2 {
        return Err(Error::InvalidSeries("need T > 0 and at least two samples".into()));
    }
    let slack = 1e-12 * t_end;
    let (first, last) = (series.times[0], series.times[series.len() - 1]);
    if first.abs() > slack || (last - t_end).abs() > slack {
        return Err(Error::InvalidSeries(format!(
            "series spans [{first}, {last}], expected [0, {t_end}]"
        )));
    }
    Ok(trapezoid(&series.times, &series.values) / t_end)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveAverage {
    pub value: f64,
    /// Intervals of the accepted grid.
    pub intervals: usize,
    /// `(intervals, estimate)` for every refinement level.
    pub history: Vec<(usize, f64)>,
}

/// Time-averaged entropy over `[0, T]` on a uniform grid, doubling the sample
/// density until consecutive estimates agree to `rel_tol`.
pub fn time_averaged_entropy(
    prop: &SpectralPropagator,
    psi0: &KetState,
    t_end: f64,
    intervals: usize,
    rel_tol: f64,
) -> Result<AdaptiveAverage> {
    if intervals == 0 || !(t_end > 0.0) {
        return Err(Error::InvalidParams("need T > 0 and at least one interval".into()));
    }
    let ev = prop.prepare(psi0)?;
    let sample = |times: &[f64]| -> f64 {
        let mut sum = 0.0;
        ev.for_each(times, |_, _, psi| sum += entropy_of_reduced(reduced_qubit(psi)));
        sum
    };
    let grid = uniform_times(t_end, intervals);
    let mut values = Vec::with_capacity(grid.len());
    ev.for_each(&grid, |_, _, psi| values.push(entropy_of_reduced(reduced_qubit(psi))));
    let mut n = intervals;
    let mut estimate = trapezoid(&grid, &values) / t_end;
    let mut history = vec![(n, estimate)];
    for _ in 0..MAX_DOUBLINGS {
        let h = t_end / n as f64;
        let mids: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * h).collect();
        let refined = 0.5 * estimate + 0.5 * sample(&mids) / n as f64;
        n *= 2;
        history.push((n, refined));
        let change = (refined - estimate).abs();
        estimate = refined;
        if change <= rel_tol * refined.abs() {
            return Ok(AdaptiveAverage {
                value: estimate,
                intervals: n,
                history,
            });
        }
    }
    Err(Error::ToleranceNotMet(format!(
        "time-averaged entropy not stable to {rel_tol:.0e} after {MAX_DOUBLINGS} doublings ({history:?})"
    )))
}

/// Regular `(q1, p1)` grid; cell centres include both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapGrid {
    pub q1_range: (f64, f64),
    pub p1_range: (f64, f64),
    pub n_q1: usize,
    pub n_p1: usize,
}

impl Default for MapGrid {
    fn default() -> Self {
        Self {
            q1_range: (-1.5, 1.5),
            p1_range: (-1.5, 1.5),
            n_q1: 61,
            n_p1: 61,
        }
    }
}

fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (range.0 + range.1)];
    }
    (0..n)
        .map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64)
        .collect()
}

impl MapGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_q1 == 0 || self.n_p1 == 0 || !(self.q1_range.0 <= self.q1_range.1) || !(self.p1_range.0 <= self.p1_range.1) {
            return Err(Error::InvalidParams(format!("degenerate map grid {self:?}")));
        }
        Ok(())
    }

    pub fn q1_axis(&self) -> Vec<f64> {
        axis(self.q1_range, self.n_q1)
    }

    pub fn p1_axis(&self) -> Vec<f64> {
        axis(self.p1_range, self.n_p1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Computed,
    /// `q1^2 + p1^2 >= 2`.
    OutsideBloch,
    /// No positive `p2` on the energy shell.
    OffShell,
    /// The coherent label does not fit in the Fock truncation.
    Truncation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapCell {
    pub q1: f64,
    pub p1: f64,
    pub p2: Option<f64>,
    pub value: Option<f64>,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyMap {
    pub energy: f64,
    pub grid: MapGrid,
    pub t_end: f64,
    /// Row-major: `cells[i_p1 * n_q1 + i_q1]`.
    pub cells: Vec<MapCell>,
}

impl EntropyMap {
    pub fn cell(&self, i_q1: usize, i_p1: usize) -> &MapCell {
        &self.cells[i_p1 * self.grid.n_q1 + i_q1]
    }

    pub fn computed(&self) -> impl Iterator<Item = &MapCell> {
        self.cells.iter().filter(|c| c.status == CellStatus::Computed)
    }

    /// Mean of the computed values over cells selected by `keep`.
    pub fn mean_where(&self, mut keep: impl FnMut(&MapCell) -> bool) -> Option<f64> {
        let (sum, n) = self
            .computed()
            .filter(|c| keep(c))
            .fold((0.0, 0usize), |(s, n), c| (s + c.value.unwrap_or(0.0), n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Mean entropy over the section `q2 = 0` of the shell `H = energy`.
pub fn entropy_map(
    p: &SystemParams,
    energy: f64,
    grid: &MapGrid,
    t_end: f64,
    intervals: usize,
    trunc: FockTruncation,
) -> Result<EntropyMap> {
    grid.validate()?;
    let q1s = grid.q1_axis();
    let p1s = grid.p1_axis();
    let mut cells: Vec<MapCell> = p1s
        .iter()
        .flat_map(|&p1| q1s.iter().map(move |&q1| (q1, p1)))
        .map(|(q1, p1)| {
            let mut cell = MapCell {
                q1,
                p1,
                p2: None,
                value: None,
                status: CellStatus::Computed,
            };
            if !(q1 * q1 + p1 * p1 < BLOCH_RADIUS2) {
                cell.status = CellStatus::OutsideBloch;
            } else if let Some(root) = solve_p2_on_shell(q1, p1, energy, p) {
                cell.p2 = Some(root.p2);
            } else {
                cell.status = CellStatus::OffShell;
            }
            cell
        })
        .collect();
    let states: Vec<Option<KetState>> = cells
        .iter_mut()
        .map(|c| {
            let p2 = c.p2?;
            let labels = phase_to_labels(&PhasePoint::new(c.q1, c.p1, 0.0, p2)).ok();
            match labels.and_then(|(tau, beta)| product_state(tau, beta, trunc).ok()) {
                Some(s) => Some(s),
                None => {
                    c.status = CellStatus::Truncation;
                    None
                }
            }
        })
        .collect();
    if states.iter().all(Option::is_none) {
        return Err(Error::EmptyRegion(format!(
            "no grid cell reaches the energy shell E = {energy} inside the truncation"
        )));
    }
    let prop = diagonalize(&HamiltonianChoice::Eff.build(p, trunc))?;
    let values = states
        .par_iter()
        .map(|s| match s {
            Some(psi) => time_averaged_entropy(&prop, psi, t_end, intervals, AVERAGE_REL_TOL).map(|a| Some(a.value)),
            None => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    for (c, v) in cells.iter_mut().zip(values) {
        c.value = v;
    }
    Ok(EntropyMap {
        energy,
        grid: *grid,
        t_end,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    #[test]
    fn product_and_bell_states() {
        let t = FockTruncation::new(12).unwrap();
        let psi = product_state(c64::new(0.3, 0.7), c64::new(0.5, -0.2), t).unwrap();
        assert!(linear_entropy_ket(&psi).abs() < 1e-12);
        assert!(linear_entropy(&DensityMatrix::from_ket(&psi)).unwrap().abs() < 1e-12);

        let mut amps = vec![c64::new(0.0, 0.0); t.dim()];
        amps[t.index(0, 0)] = c64::new(0.5f64.sqrt(), 0.0);
        amps[t.index(1, 1)] = c64::new(0.5f64.sqrt(), 0.0);
        let bell = KetState::new(amps).unwrap();
        assert!((linear_entropy_ket(&bell) - 0.5).abs() < 1e-15);
        assert!((linear_entropy(&DensityMatrix::from_ket(&bell)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_density_matrix_is_rejected() {
        let m = Mat::<c64>::from_fn(4, 4, |i, j| if i == j { c64::new(0.5, 0.0) } else { c64::new(0.0, 0.0) });
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn averages_of_simple_series() {
        let times = uniform_times(7.0, 100);
        let flat = TimeSeries::new("s", times.clone(), vec![0.3; times.len()]).unwrap();
        assert!((average_entropy(&flat, 7.0).unwrap() - 0.3).abs() < 1e-15);
        let ramp = TimeSeries::new("s", times.clone(), times.iter().map(|t| 0.5 * t / 7.0).collect()).unwrap();
        assert!((average_entropy(&ramp, 7.0).unwrap() - 0.25).abs() < 1e-14);
        assert!(average_entropy(&ramp, 8.0).is_err());
    }

    #[test]
    fn rabi_and_eff_agree_without_error_term() {
        let p = SystemParams::new(0.3, 0.15, 0.8).unwrap();
        let t = FockTruncation::new(40).unwrap();
        let psi = product_state(c64::new(0.4, 0.1), c64::new(1.0, 0.5), t).unwrap();
        let times = uniform_times(100.0, 50);
        let a = entropy_series(&p, &psi, &times, HamiltonianChoice::Rabi).unwrap();
        let b = entropy_series(&p, &psi, &times, HamiltonianChoice::Perturbed(0.0)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(a.values.iter().all(|s| (-1e-12..=ENTROPY_MAX + 1e-12).contains(s)));
        assert!(a.max() > 1e-3);
    }

    #[test]
    fn adaptive_average_matches_dense_trapezoid() {
        let p = SystemParams::new(0.3, 0.15, 0.8).unwrap();
        let t = FockTruncation::new(40).unwrap();
        let psi = product_state(c64::new(0.4, 0.1), c64::new(1.0, 0.5), t).unwrap();
        let prop = HamiltonianChoice::Eff.propagator(&p, t).unwrap();
        let avg = time_averaged_entropy(&prop, &psi, 200.0, 200, 1e-6).unwrap();
        let dense = entropy_series_with(&prop, &psi, &uniform_times(200.0, avg.intervals)).unwrap();
        assert!((average_entropy(&dense, 200.0).unwrap() - avg.value).abs() < 1e-12);
        assert!(avg.history.len() >= 2);
    }

    #[test]
    fn map_masks_and_roots() {
        let p = SystemParams::new(0.02, 2e-4, 4.0).unwrap();
        let grid = MapGrid {
            q1_range: (0.90003, 1.5),
            p1_range: (0.0, 0.0),
            n_q1: 2,
            n_p1: 1,
        };
        let map = entropy_map(&p, 0.018, &grid, 2000.0, 50, FockTruncation::new(120).unwrap()).unwrap();
        let c = map.cell(0, 0);
        assert_eq!(c.status, CellStatus::Computed);
        assert!((c.p2.unwrap() - 7.7019).abs() < 1e-3);
        assert!(c.value.unwrap() >= 0.0);
        assert_eq!(map.cell(1, 0).status, CellStatus::OutsideBloch);
    }

    #[test]
    fn unreachable_shell_is_an_error() {
        let p = SystemParams::new(0.02, 2e-4, 4.0).unwrap();
        let grid = MapGrid {
            n_q1: 3,
            n_p1: 3,
            ..MapGrid::default()
        };
        let err = entropy_map(&p, -1.0, &grid, 10.0, 10, FockTruncation::new(20).unwrap()).unwrap_err();
        assert!(matches!(err, Error::EmptyRegion(_)));
    }
}

use faer::{Mat, Side};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use super::echo::{truncation_of, HamiltonianChoice};
use super::series::{check_increasing, TimeSeries};
use crate::error::{Error, Result};
use crate::frames::SystemParams;
use crate::propagation::{Evolution, SpectralPropagator};
use crate::quantum::KetState;

pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Above this value of `eps^2 max var` the small-eps expansion is suspect.
pub const EPSILON_WARN: f64 = 0.1;
/// Below this `R^2` a Lyapunov fit is flagged.
pub const FIT_RELIABLE_R2: f64 = 0.9;
const TIE_TOL: f64 = 1e-9;
const BATCH_ENTRIES: usize = 1 << 21;

/// Generator of the butterfly operator `W = exp(i eps G)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtocOperator {
    /// `(a + a†) / 2` on the cavity.
    #[default]
    Quadrature,
    /// `sigma_x` on the qubit.
    SigmaX,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtocConfig {
    pub epsilon: f64,
    pub times: Vec<f64>,
    #[serde(default)]
    pub operator: OtocOperator,
}

impl OtocConfig {
    pub fn new(times: Vec<f64>) -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            times,
            operator: OtocOperator::Quadrature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        check_increasing(&self.times)
    }
}

/// Spectral resolution of the generator on its own factor.
enum Generator {
    /// Cavity eigenvalues and real eigenvectors (columns).
    Cavity { values: Vec<f64>, vecs: Mat<f64> },
    SigmaX,
}

impl Generator {
    fn new(op: OtocOperator, cavity_dim: usize) -> Result<Self> {
        match op {
            OtocOperator::SigmaX => Ok(Self::SigmaX),
            OtocOperator::Quadrature => {
                let g = Mat::<f64>::from_fn(cavity_dim, cavity_dim, |i, j| {
                    if i + 1 == j {
                        0.5 * (j as f64).sqrt()
                    } else if j + 1 == i {
                        0.5 * (i as f64).sqrt()
                    } else {
                        0.0
                    }
                });
                let evd = g
                    .self_adjoint_eigen(Side::Lower)
                    .map_err(|e| Error::Eigen(format!("{e:?}")))?;
                Ok(Self::Cavity {
                    values: (0..cavity_dim).map(|i| evd.S()[i]).collect(),
                    vecs: evd.U().to_owned(),
                })
            }
        }
    }

    /// Spectral weights `(x_k, w_k)` of a batch of states (columns of `buf`).
    fn weights(&self, buf: &[c64], dim: usize, nt: usize) -> Vec<Vec<(f64, f64)>> {
        let d = dim / 2;
        match self {
            Self::SigmaX => (0..nt)
                .map(|c| {
                    let psi = &buf[c * dim..(c + 1) * dim];
                    let (g, e) = psi.split_at(d);
                    let plus: f64 = g.iter().zip(e).map(|(a, b)| (a + b).norm_sqr()).sum();
                    let minus: f64 = g.iter().zip(e).map(|(a, b)| (a - b).norm_sqr()).sum();
                    vec![(1.0, 0.5 * plus), (-1.0, 0.5 * minus)]
                })
                .collect(),
            Self::Cavity { values, vecs } => {
                // Columns are (state, qubit sector) pairs.
                let cols = 2 * nt;
                let part = |f: fn(&c64) -> f64| {
                    Mat::<f64>::from_fn(d, cols, |n, j| f(&buf[(j / 2) * dim + (j % 2) * d + n]))
                };
                let re = vecs.transpose() * part(|z| z.re);
                let im = vecs.transpose() * part(|z| z.im);
                (0..nt)
                    .map(|c| {
                        values
                            .iter()
                            .enumerate()
                            .map(|(k, &x)| {
                                let w = (0..2)
                                    .map(|s| re[(k, 2 * c + s)].powi(2) + im[(k, 2 * c + s)].powi(2))
                                    .sum();
                                (x, w)
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// `<G^2> - <G>^2` applied directly to the state.
    fn variance(&self, psi: &[c64]) -> f64 {
        let d = psi.len() / 2;
        match self {
            Self::SigmaX => {
                let (g, e) = psi.split_at(d);
                let mean: f64 = 2.0 * g.iter().zip(e).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
                1.0 - mean * mean
            }
            Self::Cavity { .. } => {
                let mut mean = 0.0;
                let mut second = 0.0;
                for sector in psi.chunks_exact(d) {
                    for n in 0..d {
                        let mut gv = c64::new(0.0, 0.0);
                        if n > 0 {
                            gv += sector[n - 1] * (n as f64).sqrt();
                        }
                        if n + 1 < d {
                            gv += sector[n + 1] * ((n + 1) as f64).sqrt();
                        }
                        gv *= 0.5;
                        mean += (sector[n].conj() * gv).re;
                        second += gv.norm_sqr();
                    }
                }
                second - mean * mean
            }
        }
    }
}

/// `1 - |sum_k w_k exp(i eps x_k)|^2 / W^2` with `W = sum_k w_k`, written
/// through `u = sum w 2 sin^2(eps x / 2)` and `v = sum w sin(eps x)` so that
/// no `1 - (1 - small)` cancellation occurs.
fn deficit(weights: &[(f64, f64)], eps: f64) -> f64 {
    let (mut u, mut v, mut w) = (0.0, 0.0, 0.0);
    for &(x, wk) in weights {
        let h = (0.5 * eps * x).sin();
        u += wk * 2.0 * h * h;
        v += wk * (eps * x).sin();
        w += wk;
    }
    (2.0 * u * w - u * u - v * v) / (w * w)
}

fn batches<'a>(ev: &'a Evolution<'_>, times: &'a [f64]) -> impl Iterator<Item = (&'a [f64], Vec<c64>)> + 'a {
    let batch = (BATCH_ENTRIES / ev.dim().max(1)).max(1);
    times.chunks(batch).map(move |ts| (ts, ev.chunk(ts)))
}

/// `var[G](t)` in the state `exp(-i H_eff t) psi0`.
pub fn otoc_variance(p: &SystemParams, psi0: &KetState, times: &[f64]) -> Result<TimeSeries> {
    otoc_variance_of(p, psi0, times, OtocOperator::Quadrature)
}

pub fn otoc_variance_of(
    p: &SystemParams,
    psi0: &KetState,
    times: &[f64],
    op: OtocOperator,
) -> Result<TimeSeries> {
    check_increasing(times)?;
    let prop = HamiltonianChoice::Eff.propagator(p, truncation_of(psi0)?)?;
    variance_with(&prop, psi0, times, op)
}

pub fn variance_with(
    prop: &SpectralPropagator,
    psi0: &KetState,
    times: &[f64],
    op: OtocOperator,
) -> Result<TimeSeries> {
    let generator = Generator::new(op, psi0.dim() / 2)?;
    let ev = prop.prepare(psi0)?;
    let mut values = Vec::with_capacity(times.len());
    ev.for_each(times, |_, _, psi| values.push(generator.variance(psi)));
    TimeSeries::new("otoc_variance", times.to_vec(), values)
}

#[derive(Debug, Clone, Serialize)]
pub struct OtocDirect {
    pub epsilon: f64,
    /// `F(t)`.
    pub fidelity: TimeSeries,
    /// `(1 - F(t)) / eps^2`.
    pub scaled_deficit: Vec<f64>,
    /// Variance from the same spectral weights.
    pub variance: Vec<f64>,
    pub warning: Option<String>,
}

/// With `V = |phi><phi|` the correlator collapses to
/// `F(t) = |<phi(t)| exp(i eps G) |phi(t)>|^2`, `|phi(t)> = exp(-i H_eff t)|phi>`:
/// both `V` factors project onto `|phi>`, leaving the expectation of the
/// Heisenberg-evolved `W` in the initial state times its conjugate.
/// `G` is diagonalized once on its own factor, so each sample needs only the
/// spectral weights of `|phi(t)>`.
pub fn otoc_direct(p: &SystemParams, psi0: &KetState, cfg: &OtocConfig) -> Result<OtocDirect> {
    cfg.validate()?;
    let prop = HamiltonianChoice::Eff.propagator(p, truncation_of(psi0)?)?;
    otoc_direct_with(&prop, psi0, cfg)
}

pub fn otoc_direct_with(prop: &SpectralPropagator, psi0: &KetState, cfg: &OtocConfig) -> Result<OtocDirect> {
    cfg.validate()?;
    let eps = cfg.epsilon;
    let generator = Generator::new(cfg.operator, psi0.dim() / 2)?;
    let ev = prop.prepare(psi0)?;
    let mut fid = Vec::with_capacity(cfg.times.len());
    let mut scaled = Vec::with_capacity(cfg.times.len());
    let mut variance = Vec::with_capacity(cfg.times.len());
    for (ts, buf) in batches(&ev, &cfg.times) {
        for w in generator.weights(&buf, ev.dim(), ts.len()) {
            let def = deficit(&w, eps);
            fid.push(1.0 - def);
            scaled.push(def / (eps * eps));
            let total: f64 = w.iter().map(|x| x.1).sum();
            let mean: f64 = w.iter().map(|x| x.0 * x.1).sum::<f64>() / total;
            let second: f64 = w.iter().map(|x| x.0 * x.0 * x.1).sum::<f64>() / total;
            variance.push(second - mean * mean);
        }
    }
    let max_var = variance.iter().copied().fold(0.0, f64::max);
    let warning = (eps * eps * max_var > EPSILON_WARN).then(|| {
        format!(
            "eps^2 max var = {:.3e} exceeds {EPSILON_WARN}; small-eps expansion unreliable",
            eps * eps * max_var
        )
    });
    Ok(OtocDirect {
        epsilon: eps,
        fidelity: TimeSeries::new("otoc_fidelity", cfg.times.clone(), fid)?,
        scaled_deficit: scaled,
        variance,
        warning,
    })
}

/// Agreement of `(1 - F)/eps^2` with the variance at `eps` and `eps/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonConsistency {
    pub epsilon: f64,
    /// Largest `|(1 - F)/eps^2 - var| / var` at `eps`.
    pub deviation: f64,
    /// Same at `eps / 2`.
    pub deviation_half: f64,
    /// `log2(deviation / deviation_half)`.
    pub observed_order: f64,
}

pub fn otoc_epsilon_check(
    prop: &SpectralPropagator,
    psi0: &KetState,
    times: &[f64],
    epsilon: f64,
) -> Result<EpsilonConsistency> {
    let reference = variance_with(prop, psi0, times, OtocOperator::Quadrature)?;
    let worst = |eps: f64| -> Result<f64> {
        let cfg = OtocConfig {
            epsilon: eps,
            times: times.to_vec(),
            operator: OtocOperator::Quadrature,
        };
        let d = otoc_direct_with(prop, psi0, &cfg)?;
        Ok(d.scaled_deficit
            .iter()
            .zip(&reference.values)
            .map(|(s, v)| (s - v).abs() / v.abs().max(1e-300))
            .fold(0.0, f64::max))
    };
    let deviation = worst(epsilon)?;
    let deviation_half = worst(0.5 * epsilon)?;
    Ok(EpsilonConsistency {
        epsilon,
        deviation,
        deviation_half,
        observed_order: (deviation / deviation_half).log2(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScramblingTime {
    pub t_star: f64,
    pub value: f64,
    pub index: usize,
    /// The maximum sits on the last sample, so the horizon may be too short.
    pub at_horizon: bool,
}

/// First sample attaining the global maximum (within relative `1e-9`).
pub fn scrambling_time(series: &TimeSeries) -> Result<ScramblingTime> {
    if series.is_empty() {
        return Err(Error::InvalidSeries("empty series".into()));
    }
    let max = series.max();
    let floor = max - TIE_TOL * max.abs();
    let index = series
        .values
        .iter()
        .position(|&v| v >= floor)
        .expect("maximum is attained");
    Ok(ScramblingTime {
        t_star: series.times[index],
        value: series.values[index],
        index,
        at_horizon: index + 1 == series.len() && series.len() > 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovFit {
    pub lambda: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub window: (f64, f64),
    pub reliable: bool,
}

/// Least-squares slope of `ln(values)` against time on `window`.
pub fn lyapunov_fit(series: &TimeSeries, window: (f64, f64)) -> Result<LyapunovFit> {
    let (lo, hi) = window;
    if series.is_empty() || !(lo < hi) || lo < series.times[0] || hi > series.times[series.len() - 1] {
        return Err(Error::InvalidSeries(format!(
            "fit window [{lo}, {hi}] is not inside the sampled range"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in series.times.iter().zip(&series.values) {
        if t < lo || t > hi {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::InvalidSeries(format!("non-positive value {v} at t = {t}")));
        }
        xs.push(t);
        ys.push(v.ln());
    }
    if xs.len() < 3 {
        return Err(Error::InvalidSeries(format!(
            "fit window holds {} samples, need at least 3",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let lambda = sxy / sxx;
    let intercept = my - lambda * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - lambda * x).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(LyapunovFit {
        lambda,
        intercept,
        r_squared,
        points: xs.len(),
        window,
        reliable: r_squared >= FIT_RELIABLE_R2,
    })
}

/// `[0.05 t*, 0.8 t*]`.
pub fn default_fit_window(t_star: f64) -> (f64, f64) {
    (0.05 * t_star, 0.8 * t_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::uniform_times;
    use crate::quantum::{product_state, FockTruncation};
    use rand::{Rng, SeedableRng};

    fn plus_vacuum(n_max: usize) -> KetState {
        product_state(c64::new(1.0, 0.0), c64::new(0.0, 0.0), FockTruncation::new(n_max).unwrap()).unwrap()
    }

    #[test]
    fn vacuum_variance_is_a_quarter() {
        let p = SystemParams::new(0.3, 0.1, 0.5).unwrap();
        let v = otoc_variance(&p, &plus_vacuum(30), &[0.0]).unwrap();
        assert!((v.values[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn initial_fidelity_matches_gaussian_closed_form() {
        let p = SystemParams::new(0.3, 0.1, 0.5).unwrap();
        for eps in [1e-3, 1e-2, 0.1] {
            let mut cfg = OtocConfig::new(vec![0.0]);
            cfg.epsilon = eps;
            let d = otoc_direct(&p, &plus_vacuum(40), &cfg).unwrap();
            let want = (-eps * eps / 4.0).exp();
            assert!((d.fidelity.values[0] - want).abs() < 1e-14, "{eps}");
        }
    }

    #[test]
    fn spectral_and_direct_variances_agree() {
        let p = SystemParams::new(0.3, 0.15, 0.8).unwrap();
        let psi = plus_vacuum(40);
        let times = uniform_times(80.0, 30);
        let v = otoc_variance(&p, &psi, &times).unwrap();
        let d = otoc_direct(&p, &psi, &OtocConfig::new(times)).unwrap();
        for (a, b) in v.values.iter().zip(&d.variance) {
            assert!((a - b).abs() < 1e-10 * a.max(1.0));
        }
        assert!(d.warning.is_none());
    }

    #[test]
    fn deficit_converges_to_variance() {
        let p = SystemParams::new(0.3, 0.15, 0.8).unwrap();
        let psi = plus_vacuum(40);
        let prop = HamiltonianChoice::Eff.propagator(&p, FockTruncation::new(40).unwrap()).unwrap();
        let c = otoc_epsilon_check(&prop, &psi, &uniform_times(60.0, 20), 1e-2).unwrap();
        assert!(c.deviation_half < c.deviation);
        assert!(c.observed_order >= 1.0, "{c:?}");
    }

    #[test]
    fn decoupled_fidelity_is_constant() {
        let p = SystemParams::new(0.3, 0.0, 0.5).unwrap();
        let d = otoc_direct(&p, &plus_vacuum(30), &OtocConfig::new(uniform_times(50.0, 25))).unwrap();
        let f0 = d.fidelity.values[0];
        assert!(d.fidelity.values.iter().all(|f| (f - f0).abs() < 1e-14));
    }

    #[test]
    fn sigma_x_hook() {
        let p = SystemParams::new(0.3, 0.1, 0.5).unwrap();
        let psi = plus_vacuum(30);
        let v = otoc_variance_of(&p, &psi, &[0.0], OtocOperator::SigmaX).unwrap();
        assert!(v.values[0].abs() < 1e-14, "{}", v.values[0]);
        let cfg = OtocConfig {
            epsilon: 1e-3,
            times: uniform_times(20.0, 10),
            operator: OtocOperator::SigmaX,
        };
        let d = otoc_direct(&p, &psi, &cfg).unwrap();
        let v = otoc_variance_of(&p, &psi, &cfg.times, OtocOperator::SigmaX).unwrap();
        for (a, b) in v.values.iter().zip(&d.variance) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn large_epsilon_warns() {
        let p = SystemParams::new(0.3, 0.1, 0.5).unwrap();
        let mut cfg = OtocConfig::new(vec![0.0]);
        cfg.epsilon = 1.0;
        assert!(otoc_direct(&p, &plus_vacuum(30), &cfg).unwrap().warning.is_some());
        cfg.epsilon = 0.0;
        assert!(otoc_direct(&p, &plus_vacuum(30), &cfg).is_err());
    }

    #[test]
    fn scrambling_time_examples() {
        let s = TimeSeries::new("v", vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0, 3.0, 3.0, 2.0]).unwrap();
        let t = scrambling_time(&s).unwrap();
        assert_eq!(t.t_star, 2.0);
        assert!(!t.at_horizon);
        let mono = TimeSeries::new("v", vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]).unwrap();
        let t = scrambling_time(&mono).unwrap();
        assert_eq!(t.t_star, 2.0);
        assert!(t.at_horizon);
    }

    #[test]
    fn lyapunov_examples() {
        let times = uniform_times(10.0, 200);
        let exp = TimeSeries::new("e", times.clone(), times.iter().map(|t| (0.5 * t).exp()).collect()).unwrap();
        let fit = lyapunov_fit(&exp, (0.0, 10.0)).unwrap();
        assert!((fit.lambda - 0.5).abs() < 1e-6);
        assert!(fit.r_squared > 0.999999 && fit.reliable);

        let flat = TimeSeries::new("c", times.clone(), vec![2.0; times.len()]).unwrap();
        let fit = lyapunov_fit(&flat, (0.0, 10.0)).unwrap();
        assert!(fit.lambda.abs() < 1e-15);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let noise = TimeSeries::new("n", times.clone(), times.iter().map(|_| rng.gen_range(0.5..1.5)).collect()).unwrap();
        let fit = lyapunov_fit(&noise, (0.0, 10.0)).unwrap();
        assert!(fit.r_squared < 0.1 && !fit.reliable, "{}", fit.r_squared);

        let bad = TimeSeries::new("b", vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0]).unwrap();
        assert!(lyapunov_fit(&bad, (0.0, 2.0)).is_err());
        assert!(lyapunov_fit(&exp, (5.0, 11.0)).is_err());
        assert_eq!(default_fit_window(100.0), (5.0, 80.0));
    }
}

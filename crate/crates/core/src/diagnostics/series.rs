use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::{inner, KetState};

/// Sampled scalar signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    /// Requires equal lengths and strictly increasing times.
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        check_increasing(&times)?;
        Ok(Self {
            label: label.into(),
            times,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest value at times strictly after `t`.
    pub fn max_after(&self, t: f64) -> Option<f64> {
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(s, _)| **s > t)
            .map(|(_, v)| *v)
            .reduce(f64::max)
    }

    /// Trapezoidal mean over the full sampled span.
    pub fn time_average(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::InvalidSeries("need at least two samples".into()));
        }
        let span = self.times[self.len() - 1] - self.times[0];
        Ok(trapezoid(&self.times, &self.values) / span)
    }
}

pub(crate) fn check_increasing(times: &[f64]) -> Result<()> {
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidSeries(format!(
            "times must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidSeries("non-finite sample time".into()));
    }
    Ok(())
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// `intervals + 1` equally spaced times covering `[0, t_end]`.
pub fn uniform_times(t_end: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|k| t_end * k as f64 / intervals as f64)
        .collect()
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &KetState, b: &KetState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

pub(crate) fn fidelity_raw(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    inner(a, b).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as c64;

    #[test]
    fn fidelity_examples() {
        let zero = KetState::basis(2, 0);
        let one = KetState::basis(2, 1);
        let plus = KetState::new(vec![c64::new(0.5f64.sqrt(), 0.0); 2]).unwrap();
        assert_eq!(fidelity(&zero, &zero).unwrap(), 1.0);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity(&zero, &KetState::basis(3, 0)).is_err());
    }

    #[test]
    fn series_validation() {
        assert!(TimeSeries::new("x", vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(TimeSeries::new("x", vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        let s = TimeSeries::new("x", vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.max(), 3.0);
        assert_eq!(s.max_after(1.0), Some(2.0));
        assert!((s.time_average().unwrap() - 2.25).abs() < 1e-15);
    }

    #[test]
    fn uniform_grid_endpoints() {
        let t = uniform_times(10.0, 4);
        assert_eq!(t, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
    }
}

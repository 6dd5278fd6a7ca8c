//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 8(5,3)) with
//! seventh-order dense output.
//!
//! The integrator works on flat `f64` state vectors. Complex systems store
//! interleaved `(re, im)` pairs. Every accepted step is reported to an
//! observer, which can query the dense interpolant anywhere inside the step
//! and may stop the integration early.

mod tableau;

use crate::error::{Error, Result};
use tableau::{A, B, C, D, E3, E5, STAGES, STAGES_EXTENDED};

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

/// First-order system `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.1)(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|; infinite by default.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Dop853 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub t: f64,
    pub y: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub stopped_early: bool,
}

/// View of one accepted step handed to the observer.
pub struct StepView<'a, S: OdeSystem + ?Sized> {
    sys: &'a S,
    t_old: f64,
    t: f64,
    y_old: &'a [f64],
    y: &'a [f64],
    f_new: &'a [f64],
    k: &'a mut [Vec<f64>],
    interp: Option<Vec<Vec<f64>>>,
    extra_evals: usize,
}

impl<S: OdeSystem + ?Sized> StepView<'_, S> {
    pub fn t_old(&self) -> f64 {
        self.t_old
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y_old(&self) -> &[f64] {
        self.y_old
    }

    pub fn y(&self) -> &[f64] {
        self.y
    }

    /// Dense-output evaluation at `t` within `[t_old, t]`.
    pub fn eval(&mut self, t: f64) -> Vec<f64> {
        if self.interp.is_none() {
            self.build_interpolant();
        }
        let h = self.t - self.t_old;
        let x = (t - self.t_old) / h;
        let coeffs = self.interp.as_ref().expect("interpolant built above");
        let n = self.y_old.len();
        let mut out = vec![0.0; n];
        for (i, f) in coeffs.iter().rev().enumerate() {
            let w = if i % 2 == 0 { x } else { 1.0 - x };
            for j in 0..n {
                out[j] = (out[j] + f[j]) * w;
            }
        }
        for j in 0..n {
            out[j] += self.y_old[j];
        }
        out
    }

    fn build_interpolant(&mut self) {
        let n = self.y_old.len();
        let h = self.t - self.t_old;
        let mut ytmp = vec![0.0; n];
        for s in (STAGES + 1)..STAGES_EXTENDED {
            for j in 0..n {
                let mut acc = 0.0;
                for (m, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += a * self.k[m][j];
                    }
                }
                ytmp[j] = self.y_old[j] + h * acc;
            }
            let (_, tail) = self.k.split_at_mut(s);
            self.sys.rhs(self.t_old + C[s] * h, &ytmp, &mut tail[0]);
            self.extra_evals += 1;
        }
        let f_old = &self.k[0];
        let mut coeffs = vec![vec![0.0; n]; 3 + D.len()];
        for j in 0..n {
            let dy = self.y[j] - self.y_old[j];
            coeffs[0][j] = dy;
            coeffs[1][j] = h * f_old[j] - dy;
            coeffs[2][j] = 2.0 * dy - h * (self.f_new[j] + f_old[j]);
        }
        for (row, d) in D.iter().enumerate() {
            for j in 0..n {
                let mut acc = 0.0;
                for (m, dm) in d.iter().enumerate() {
                    if *dm != 0.0 {
                        acc += dm * self.k[m][j];
                    }
                }
                coeffs[3 + row][j] = h * acc;
            }
        }
        self.interp = Some(coeffs);
    }
}

impl Dop853 {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }

    /// Integrate from `t0` to `t_end`, calling `observer` after every
    /// accepted step.
    pub fn integrate<S, F>(
        &self,
        sys: &S,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        mut observer: F,
    ) -> Result<Summary>
    where
        S: OdeSystem + ?Sized,
        F: FnMut(&mut StepView<'_, S>) -> Control,
    {
        let n = sys.dim();
        if y0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: y0.len(),
            });
        }
        let direction = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut summary = Summary {
            t,
            y: y.clone(),
            accepted: 0,
            rejected: 0,
            rhs_evals: 0,
            stopped_early: false,
        };
        if t_end == t0 {
            return Ok(summary);
        }

        // k[0..12] are the stages, k[12] holds f(t + h, y_new), k[13..16]
        // are the extra dense-output stages.
        let mut k = vec![vec![0.0; n]; STAGES_EXTENDED];
        sys.rhs(t, &y, &mut k[0]);
        summary.rhs_evals += 1;
        let mut f = k[0].clone();

        let mut h_abs = self.initial_step(sys, t, &y, &f, direction, &mut summary.rhs_evals);
        let mut y_new = vec![0.0; n];
        let mut ytmp = vec![0.0; n];
        let mut y_old = vec![0.0; n];
        let mut step_rejected = false;

        loop {
            if summary.accepted + summary.rejected >= self.max_steps {
                return Err(Error::TooManySteps(self.max_steps));
            }
            let min_step = 10.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE);
            if h_abs > self.max_step {
                h_abs = self.max_step;
            }
            if h_abs < min_step {
                return Err(Error::StepUnderflow { t, h: h_abs });
            }
            let mut h = h_abs * direction;
            let mut t_new = t + h;
            if direction * (t_new - t_end) > 0.0 {
                t_new = t_end;
            }
            h = t_new - t;
            h_abs = h.abs();

            k[0].copy_from_slice(&f);
            for s in 1..STAGES {
                for j in 0..n {
                    let mut acc = 0.0;
                    for (m, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += a * k[m][j];
                        }
                    }
                    ytmp[j] = y[j] + h * acc;
                }
                let (_, tail) = k.split_at_mut(s);
                sys.rhs(t + C[s] * h, &ytmp, &mut tail[0]);
            }
            for j in 0..n {
                let mut acc = 0.0;
                for (m, b) in B.iter().enumerate() {
                    if *b != 0.0 {
                        acc += b * k[m][j];
                    }
                }
                y_new[j] = y[j] + h * acc;
            }
            {
                let (_, tail) = k.split_at_mut(STAGES);
                sys.rhs(t + h, &y_new, &mut tail[0]);
            }
            summary.rhs_evals += STAGES;

            let err = self.error_norm(&k, h, &y, &y_new);
            if err < 1.0 {
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(ERROR_EXPONENT)).min(MAX_FACTOR)
                };
                let factor = if step_rejected { factor.min(1.0) } else { factor };
                step_rejected = false;

                y_old.copy_from_slice(&y);
                let t_old = t;
                t = t_new;
                std::mem::swap(&mut y, &mut y_new);
                f.copy_from_slice(&k[STAGES]);
                summary.accepted += 1;

                let control = {
                    let mut view = StepView {
                        sys,
                        t_old,
                        t,
                        y_old: &y_old,
                        y: &y,
                        f_new: &f,
                        k: &mut k,
                        interp: None,
                        extra_evals: 0,
                    };
                    let c = observer(&mut view);
                    summary.rhs_evals += view.extra_evals;
                    c
                };
                if control == Control::Stop {
                    summary.stopped_early = true;
                    break;
                }
                if direction * (t - t_end) >= 0.0 {
                    break;
                }
                h_abs *= factor;
            } else {
                summary.rejected += 1;
                step_rejected = true;
                h_abs *= (SAFETY * err.powf(ERROR_EXPONENT)).max(MIN_FACTOR);
            }
        }
        summary.t = t;
        summary.y = y;
        Ok(summary)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.abs().max(b.abs())
    }

    fn error_norm(&self, k: &[Vec<f64>], h: f64, y: &[f64], y_new: &[f64]) -> f64 {
        let n = y.len();
        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for j in 0..n {
            let sc = self.scale(y[j], y_new[j]);
            let mut a5 = 0.0;
            let mut a3 = 0.0;
            for m in 0..=STAGES {
                a5 += E5[m] * k[m][j];
                a3 += E3[m] * k[m][j];
            }
            e5 += (a5 / sc).powi(2);
            e3 += (a3 / sc).powi(2);
        }
        if e5 == 0.0 && e3 == 0.0 {
            return 0.0;
        }
        let denom = e5 + 0.01 * e3;
        h.abs() * e5 / (denom * n as f64).sqrt()
    }

    fn initial_step<S: OdeSystem + ?Sized>(
        &self,
        sys: &S,
        t: f64,
        y: &[f64],
        f: &[f64],
        direction: f64,
        evals: &mut usize,
    ) -> f64 {
        let n = y.len();
        let rms = |v: &dyn Fn(usize) -> f64| -> f64 {
            ((0..n).map(|j| v(j).powi(2)).sum::<f64>() / n as f64).sqrt()
        };
        let d0 = rms(&|j| y[j] / self.scale(y[j], y[j]));
        let d1 = rms(&|j| f[j] / self.scale(y[j], y[j]));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1: Vec<f64> = (0..n).map(|j| y[j] + h0 * direction * f[j]).collect();
        let mut f1 = vec![0.0; n];
        sys.rhs(t + h0 * direction, &y1, &mut f1);
        *evals += 1;
        let d2 = rms(&|j| (f1[j] - f[j]) / self.scale(y[j], y[j])) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(self.max_step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(omega: f64) -> (usize, impl Fn(f64, &[f64], &mut [f64])) {
        (2, move |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -omega * omega * y[0];
        })
    }

    #[test]
    fn harmonic_oscillator_matches_cosine() {
        let sys = oscillator(1.3);
        let s = Dop853::with_tolerance(1e-12)
            .integrate(&sys, 0.0, &[1.0, 0.0], 50.0, |_| Control::Continue)
            .unwrap();
        assert!((s.y[0] - (1.3f64 * 50.0).cos()).abs() < 1e-9);
        assert!((s.y[1] + 1.3 * (1.3f64 * 50.0).sin()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_is_accurate_inside_steps() {
        let sys = oscillator(1.0);
        let mut worst: f64 = 0.0;
        Dop853::with_tolerance(1e-11)
            .integrate(&sys, 0.0, &[1.0, 0.0], 20.0, |step| {
                for i in 1..8 {
                    let t = step.t_old() + (step.t() - step.t_old()) * i as f64 / 8.0;
                    let y = step.eval(t);
                    worst = worst.max((y[0] - t.cos()).abs());
                }
                Control::Continue
            })
            .unwrap();
        assert!(worst < 1e-8, "dense output error {worst}");
    }

    #[test]
    fn backward_integration_returns_to_start() {
        let sys = oscillator(2.0);
        let dop = Dop853::with_tolerance(1e-12);
        let fwd = dop
            .integrate(&sys, 0.0, &[0.3, -0.1], 10.0, |_| Control::Continue)
            .unwrap();
        let back = dop
            .integrate(&sys, 10.0, &fwd.y, 0.0, |_| Control::Continue)
            .unwrap();
        assert!((back.y[0] - 0.3).abs() < 1e-9);
        assert!((back.y[1] + 0.1).abs() < 1e-9);
    }

    #[test]
    fn observer_can_stop() {
        let sys = oscillator(1.0);
        let mut count = 0;
        let s = Dop853::with_tolerance(1e-8)
            .integrate(&sys, 0.0, &[1.0, 0.0], 1e3, |_| {
                count += 1;
                if count == 3 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            })
            .unwrap();
        assert!(s.stopped_early);
        assert_eq!(s.accepted, 3);
    }

    #[test]
    fn mismatched_initial_state_is_rejected() {
        let sys = oscillator(1.0);
        let r = Dop853::default().integrate(&sys, 0.0, &[1.0], 1.0, |_| Control::Continue);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}

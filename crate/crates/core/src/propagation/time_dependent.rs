use num_complex::Complex64 as c64;

use crate::error::{Error, Result};
use crate::frames::LabHamiltonian;
use crate::ode::{Control, Dop853, OdeSystem};
use crate::quantum::{norm, KetState, OperatorMatrix};

/// `H(t)` applied to a vector.
pub trait TimeDependentHamiltonian {
    fn dim(&self) -> usize;
    fn apply(&self, t: f64, psi: &[c64], out: &mut [c64]);
}

impl TimeDependentHamiltonian for OperatorMatrix {
    fn dim(&self) -> usize {
        OperatorMatrix::dim(self)
    }

    fn apply(&self, _t: f64, psi: &[c64], out: &mut [c64]) {
        let m = self.mat();
        out.iter_mut().for_each(|z| *z = c64::new(0.0, 0.0));
        for (j, &x) in psi.iter().enumerate() {
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(crate::quantum::col(m, j)) {
                *o += a * x;
            }
        }
    }
}

impl TimeDependentHamiltonian for LabHamiltonian {
    fn dim(&self) -> usize {
        LabHamiltonian::dim(self)
    }

    fn apply(&self, t: f64, psi: &[c64], out: &mut [c64]) {
        LabHamiltonian::apply(self, t, psi, out)
    }
}

/// Dense Hamiltonian rebuilt from a closure at every evaluation.
pub struct FnHamiltonian<F> {
    dim: usize,
    build: F,
}

impl<F: Fn(f64) -> OperatorMatrix> FnHamiltonian<F> {
    pub fn new(dim: usize, build: F) -> Self {
        Self { dim, build }
    }
}

impl<F: Fn(f64) -> OperatorMatrix> TimeDependentHamiltonian for FnHamiltonian<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, t: f64, psi: &[c64], out: &mut [c64]) {
        let h = (self.build)(t);
        TimeDependentHamiltonian::apply(&h, t, psi, out)
    }
}

/// Schrödinger equation on interleaved `(re, im)` storage.
struct Schrodinger<'a, H: ?Sized> {
    h: &'a H,
}

impl<H: TimeDependentHamiltonian + ?Sized> OdeSystem for Schrodinger<'_, H> {
    fn dim(&self) -> usize {
        2 * self.h.dim()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.h.dim();
        let psi: Vec<c64> = y.chunks_exact(2).map(|p| c64::new(p[0], p[1])).collect();
        let mut hpsi = vec![c64::new(0.0, 0.0); n];
        self.h.apply(t, &psi, &mut hpsi);
        for (d, z) in dy.chunks_exact_mut(2).zip(&hpsi) {
            // −i (a + ib) = b − ia
            d[0] = z.im;
            d[1] = -z.re;
        }
    }
}

fn pack(psi: &[c64]) -> Vec<f64> {
    psi.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn unpack(y: &[f64]) -> Vec<c64> {
    y.chunks_exact(2).map(|p| c64::new(p[0], p[1])).collect()
}

/// Integrator settings for a requested accuracy `tol` on the state.
pub fn integrator_for(tol: f64) -> Dop853 {
    let local = (tol * 1e-2).max(1e-14);
    Dop853 {
        rtol: local,
        atol: local,
        ..Dop853::default()
    }
}

/// States at `times` (sorted, starting at or after `t0`), integrated from
/// `psi0` at `t0` without renormalization. Fails if the norm drifts by more
/// than `tol`.
pub fn evolve_time_dependent_series<H>(
    h: &H,
    psi0: &KetState,
    t0: f64,
    times: &[f64],
    tol: f64,
) -> Result<Vec<KetState>>
where
    H: TimeDependentHamiltonian + ?Sized,
{
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi0.dim(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance {tol} must be positive")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::InvalidParams("sample times must be sorted and start at t0".into()));
    }
    let sys = Schrodinger { h };
    let y0 = pack(psi0.amplitudes());
    let mut out: Vec<Vec<c64>> = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && times[next] == t0 {
        out.push(psi0.amplitudes().to_vec());
        next += 1;
    }
    if let Some(&t_end) = times.last() {
        if next < times.len() {
            integrator_for(tol).integrate(&sys, t0, &y0, t_end, |step| {
                while next < times.len() && times[next] <= step.t() {
                    let y = if times[next] == step.t() {
                        step.y().to_vec()
                    } else {
                        step.eval(times[next])
                    };
                    out.push(unpack(&y));
                    next += 1;
                }
                if next == times.len() {
                    Control::Stop
                } else {
                    Control::Continue
                }
            })?;
        }
    }
    let mut states = Vec::with_capacity(out.len());
    for (t, v) in times.iter().zip(out) {
        let drift = (norm(&v) - 1.0).abs();
        if drift > tol {
            return Err(Error::ToleranceNotMet(format!(
                "norm drift {drift:.3e} exceeds {tol:.1e} at t = {t}"
            )));
        }
        states.push(KetState::from_unitary_image(v));
    }
    Ok(states)
}

/// State at `t_end`, starting from `psi0` at `t = 0`.
pub fn evolve_time_dependent<H>(h: &H, psi0: &KetState, t_end: f64, tol: f64) -> Result<KetState>
where
    H: TimeDependentHamiltonian + ?Sized,
{
    if t_end < 0.0 {
        return Err(Error::InvalidParams(format!("t_end = {t_end} < 0")));
    }
    Ok(evolve_time_dependent_series(h, psi0, 0.0, &[t_end], tol)?
        .pop()
        .expect("one sample requested"))
}

use num_complex::Complex64 as c64;

use super::operators::{FockTruncation, OperatorMatrix};
use crate::error::{Error, Result};

/// Allowed deviation of a ket norm from one.
pub const NORM_TOL: f64 = 1e-9;
/// Coherent-state probability mass allowed above `n_max`.
pub const COHERENT_TAIL_TOL: f64 = 1e-8;

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KetState {
    amps: Vec<c64>,
}

impl KetState {
    /// Wraps amplitudes that are already normalized within [`NORM_TOL`].
    pub fn new(amps: Vec<c64>) -> Result<Self> {
        let norm = norm(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParams(format!(
                "ket norm {norm} deviates from 1"
            )));
        }
        Ok(Self { amps })
    }

    pub fn normalized(mut amps: Vec<c64>) -> Result<Self> {
        let n = norm(&amps);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParams("cannot normalize a zero vector".into()));
        }
        amps.iter_mut().for_each(|z| *z /= n);
        Ok(Self { amps })
    }

    /// Skips the norm check; callers guarantee unitarity of the producing map.
    pub(crate) fn from_unitary_image(amps: Vec<c64>) -> Self {
        Self { amps }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![c64::new(0.0, 0.0); dim];
        amps[k] = c64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<c64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<c64> {
        check_dim(self.dim(), other.dim())?;
        Ok(inner(&self.amps, &other.amps))
    }

    /// `self ⊗ cavity` for a qubit ket `self`.
    pub fn tensor(&self, cavity: &Self) -> Result<Self> {
        check_dim(2, self.dim())?;
        let amps = self
            .amps
            .iter()
            .flat_map(|q| cavity.amps.iter().map(move |c| q * c))
            .collect();
        Ok(Self { amps })
    }

    /// Qubit reduced density matrix `Tr_cavity |psi><psi|` as
    /// `[[rho_gg, rho_ge], [rho_eg, rho_ee]]`.
    pub fn reduced_qubit(&self) -> [[c64; 2]; 2] {
        reduced_qubit(&self.amps)
    }
}

pub(crate) fn norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn reduced_qubit(v: &[c64]) -> [[c64; 2]; 2] {
    let d = v.len() / 2;
    let (g, e) = v.split_at(d);
    let gg: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    let ee: f64 = e.iter().map(|z| z.norm_sqr()).sum();
    let ge: c64 = g.iter().zip(e).map(|(x, y)| x * y.conj()).sum();
    [[c64::new(gg, 0.0), ge], [ge.conj(), c64::new(ee, 0.0)]]
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Probability mass of the coherent state `|beta>` above `n_max`, summed
/// directly over the Poisson tail.
pub fn coherent_tail_mass(beta: c64, n_max: usize) -> f64 {
    let x = beta.norm_sqr();
    if x == 0.0 {
        return 0.0;
    }
    let ln_x = x.ln();
    let mut ln_fact: f64 = (1..=n_max + 1).map(|k| (k as f64).ln()).sum();
    let mut n = n_max + 1;
    let mut sum = 0.0;
    loop {
        let term = (-x + n as f64 * ln_x - ln_fact).exp();
        sum += term;
        if (n as f64) > x && term <= 1e-18 * sum.max(1e-300) {
            break;
        }
        if n > n_max + 100_000 {
            break;
        }
        n += 1;
        ln_fact += (n as f64).ln();
    }
    sum
}

/// Glauber coherent state `|beta>` on the cavity, renormalized after the cutoff.
pub fn glauber_state(beta: c64, trunc: FockTruncation) -> Result<KetState> {
    let tail = coherent_tail_mass(beta, trunc.n_max());
    if tail >= COHERENT_TAIL_TOL {
        return Err(Error::CoherentTail {
            beta,
            tail,
            n_max: trunc.n_max(),
            limit: COHERENT_TAIL_TOL,
        });
    }
    let d = trunc.cavity_dim();
    if beta == c64::new(0.0, 0.0) {
        return Ok(KetState::basis(d, 0));
    }
    let x = beta.norm_sqr();
    let (r, phi) = beta.to_polar();
    let ln_r = r.ln();
    let mut ln_fact = 0.0;
    let amps = (0..d)
        .map(|n| {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            let mag = (-0.5 * x + n as f64 * ln_r - 0.5 * ln_fact).exp();
            c64::from_polar(mag, n as f64 * phi)
        })
        .collect();
    KetState::normalized(amps)
}

/// Bloch coherent state `(|G> + tau |E>) / sqrt(1 + |tau|^2)`.
pub fn bloch_state(tau: c64) -> KetState {
    let s = (1.0 + tau.norm_sqr()).sqrt();
    KetState {
        amps: vec![c64::new(1.0 / s, 0.0), tau / s],
    }
}

/// `|tau> ⊗ |beta>` on the full space.
pub fn product_state(tau: c64, beta: c64, trunc: FockTruncation) -> Result<KetState> {
    let cavity = glauber_state(beta, trunc)?;
    bloch_state(tau).tensor(&cavity)
}

pub fn expectation(op: &OperatorMatrix, psi: &KetState) -> Result<c64> {
    let v = op.apply(psi.amplitudes())?;
    Ok(inner(psi.amplitudes(), &v))
}

/// `<op^2> - <op>^2`, evaluated as `|op psi|^2 - <op>^2` for Hermitian `op`.
pub fn variance(op: &OperatorMatrix, psi: &KetState) -> Result<f64> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: op.hermitian_deviation(),
        });
    }
    let v = op.apply(psi.amplitudes())?;
    let mean = inner(psi.amplitudes(), &v).re;
    let second: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    Ok(second - mean * mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::operators::build_operators;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn vacuum_and_ground() {
        let t = FockTruncation::new(10).unwrap();
        assert_eq!(glauber_state(c(0.0, 0.0), t).unwrap(), KetState::basis(11, 0));
        assert_eq!(bloch_state(c(0.0, 0.0)).amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let p = product_state(c(0.0, 0.0), c(0.0, 0.0), t).unwrap();
        assert_eq!(p, KetState::basis(22, t.index(0, 0)));
    }

    #[test]
    fn coherent_mean_field_relations() {
        let ops = build_operators(200).unwrap();
        let beta = c(0.0, 5.4461);
        let psi = glauber_state(beta, ops.trunc).unwrap();
        let a = expectation(&ops.a, &psi).unwrap();
        assert!((a - beta).norm() < 1e-6, "<a> = {a}");

        let psi1 = glauber_state(c(1.0, 0.0), ops.trunc).unwrap();
        let n = expectation(&ops.num, &psi1).unwrap();
        assert!((n.re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coherent_tail_violation_is_reported() {
        let t = FockTruncation::new(40).unwrap();
        let err = glauber_state(c(0.0, 5.45), t).unwrap_err();
        assert!(matches!(err, Error::CoherentTail { .. }));
    }

    #[test]
    fn tail_mass_matches_poisson_complement() {
        // For |beta|^2 = 4 the mass above n = 10 is 1 - sum_{n<=10} e^-4 4^n / n!.
        let mut head = 0.0;
        let mut term = (-4.0f64).exp();
        for n in 0..=10 {
            if n > 0 {
                term *= 4.0 / n as f64;
            }
            head += term;
        }
        let tail = coherent_tail_mass(c(2.0, 0.0), 10);
        assert!((tail - (1.0 - head)).abs() < 1e-14);
    }

    #[test]
    fn bloch_state_expectations() {
        let ops = build_operators(1).unwrap();
        let plus = bloch_state(c(1.0, 0.0));
        assert!((expectation(&ops.sigma_x, &plus).unwrap().re - 1.0).abs() < 1e-15);
        let seven = bloch_state(c(7.0, 0.0));
        let sz = expectation(&ops.sigma_z, &seven).unwrap().re;
        assert!((sz - 0.96).abs() < 1e-12);
    }

    #[test]
    fn labelled_caption_state_is_normalized() {
        let t = FockTruncation::new(200).unwrap();
        let psi = product_state(c(0.825, 0.0), c(0.0, 5.4461), t).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_moments_on_plus_vacuum() {
        let ops = build_operators(20).unwrap();
        let g = ops.embed_cavity(&ops.quadrature());
        let psi = product_state(c(1.0, 0.0), c(0.0, 0.0), ops.trunc).unwrap();
        assert!(expectation(&g, &psi).unwrap().norm() < 1e-15);
        assert!((variance(&g, &psi).unwrap() - 0.25).abs() < 1e-15);

        let n = ops.embed_cavity(&ops.num);
        let g2 = KetState::basis(ops.trunc.dim(), ops.trunc.index(0, 2));
        assert!((expectation(&n, &g2).unwrap().re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let ops = build_operators(3).unwrap();
        let psi = KetState::basis(5, 0);
        assert!(matches!(
            expectation(&ops.num, &psi),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}

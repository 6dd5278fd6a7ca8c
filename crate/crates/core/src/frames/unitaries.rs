use num_complex::Complex64 as c64;

use super::params::SystemParams;
use crate::error::{Error, Result};
use crate::propagation::diagonalize;
use crate::quantum::{FockTruncation, OperatorMatrix};

/// Extra Fock levels used while exponentiating the squeeze generator.
pub const SQUEEZE_MARGIN: usize = 20;
/// Largest squeezed-vacuum mass allowed above `n_max - SQUEEZE_MARGIN`.
pub const SQUEEZE_TAIL_TOL: f64 = 1e-6;

/// Probability mass of the squeezed vacuum `S(r)|0>` on Fock levels above
/// `cutoff`.
pub fn squeezed_vacuum_tail(r: f64, cutoff: usize) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let t2 = r.tanh().powi(2);
    // P(2m) = tanh^{2m} r (2m)! / (4^m (m!)^2 cosh r)
    let mut term = 1.0 / r.cosh();
    let mut m = 0usize;
    while 2 * m <= cutoff {
        m += 1;
        term *= t2 * (2 * m - 1) as f64 / (2 * m) as f64;
    }
    let mut tail = 0.0;
    loop {
        tail += term;
        if term <= 1e-18 * tail || m > 10_000_000 {
            break;
        }
        m += 1;
        term *= t2 * (2 * m - 1) as f64 / (2 * m) as f64;
    }
    tail
}

/// Checks the squeeze precondition for `r` at this truncation.
pub fn check_squeeze_truncation(r: f64, trunc: FockTruncation) -> Result<()> {
    let cutoff = trunc.n_max().saturating_sub(SQUEEZE_MARGIN);
    let tail = squeezed_vacuum_tail(r, cutoff);
    if tail >= SQUEEZE_TAIL_TOL {
        return Err(Error::TruncationInadequate {
            r,
            cutoff,
            tail,
            limit: SQUEEZE_TAIL_TOL,
        });
    }
    Ok(())
}

/// Cavity squeeze operator `U_S = exp[r(a² − a†²)/2]`, exponentiated on
/// `n_max + SQUEEZE_MARGIN` levels and projected back to `n_max`.
pub fn squeeze_unitary(r: f64, trunc: FockTruncation) -> Result<OperatorMatrix> {
    check_squeeze_truncation(r, trunc)?;
    let d = trunc.cavity_dim();
    if r == 0.0 {
        return Ok(OperatorMatrix::identity(d));
    }
    let big = d + SQUEEZE_MARGIN;
    // H = iK with K = (r/2)(a² − a†²), so exp(−iH) = exp(K).
    let gen = OperatorMatrix::from_fn(big, |n, m| {
        let k = if m == n + 2 {
            ((m * (m - 1)) as f64).sqrt()
        } else if n == m + 2 {
            -((n * (n - 1)) as f64).sqrt()
        } else {
            0.0
        };
        c64::new(0.0, 0.5 * r * k)
    });
    let u = diagonalize(&gen)?.unitary(1.0);
    Ok(u.leading_block(d))
}

/// Rotating-frame operator `U_R(t) = exp[i(ω_p/2)(a†a + σz/2)t]` (diagonal).
pub fn rotation_unitary(p: &SystemParams, t: f64, trunc: FockTruncation) -> OperatorMatrix {
    OperatorMatrix::diagonal(&rotation_phases(p, t, trunc))
}

pub(crate) fn rotation_phases(p: &SystemParams, t: f64, trunc: FockTruncation) -> Vec<c64> {
    (0..trunc.dim())
        .map(|k| {
            let (s, n) = trunc.split(k);
            let sz = if s == 0 { -0.5 } else { 0.5 };
            c64::from_polar(1.0, 0.5 * p.omega_p * (n as f64 + sz) * t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::build_operators;

    #[test]
    fn zero_squeezing_is_identity() {
        let t = FockTruncation::new(10).unwrap();
        let u = squeeze_unitary(0.0, t).unwrap();
        assert_eq!(u.max_abs_diff(&OperatorMatrix::identity(11)), 0.0);
        let p = SystemParams::new(0.02, 2e-4, 1.0).unwrap();
        assert_eq!(rotation_unitary(&p, 0.0, t).max_abs_diff(&OperatorMatrix::identity(22)), 0.0);
    }

    #[test]
    fn tail_of_squeezed_vacuum() {
        // P(0) = 1 / cosh r and P(2) = tanh^2 r / (2 cosh r); odd levels are empty.
        let r: f64 = 0.7;
        let p0 = 1.0 / r.cosh();
        let p2 = r.tanh().powi(2) / (2.0 * r.cosh());
        assert!((squeezed_vacuum_tail(r, 0) - (1.0 - p0)).abs() < 1e-14);
        assert!((squeezed_vacuum_tail(r, 1) - (1.0 - p0)).abs() < 1e-14);
        assert!((squeezed_vacuum_tail(r, 2) - (1.0 - p0 - p2)).abs() < 1e-14);
        // Summed term by term with the ratio P(2n+2)/P(2n) = tanh^2 r (2n+1)/(2n+2).
        let t2 = 4.0f64.tanh().powi(2);
        let mut p = 1.0 / 4.0f64.cosh();
        let mut kept = 0.0;
        for n in 0..=190 {
            kept += p;
            p *= t2 * (2 * n + 1) as f64 / (2 * n + 2) as f64;
        }
        let tail = squeezed_vacuum_tail(4.0, 380);
        assert!((tail - (1.0 - kept)).abs() < 1e-12, "{tail}");
        assert!(tail > 0.4);
    }

    #[test]
    fn strong_squeezing_needs_large_truncation() {
        let t = FockTruncation::new(400).unwrap();
        assert!(matches!(
            squeeze_unitary(4.0, t),
            Err(Error::TruncationInadequate { .. })
        ));
    }

    #[test]
    fn bogoliubov_relation_on_interior() {
        let r: f64 = 0.5;
        let ops = build_operators(200).unwrap();
        let u = squeeze_unitary(r, ops.trunc).unwrap();
        let lhs = &(&u * &ops.a) * &u.adjoint();
        let rhs = &(r.cosh() * &ops.a) + &(r.sinh() * &ops.a_dag);
        // Fock level n is spread up to about n e^{2r}; keep well inside.
        let inner = 40;
        let diff = lhs.leading_block(inner).max_abs_diff(&rhs.leading_block(inner));
        assert!(diff < 1e-6, "{diff}");

        let uu = &u.adjoint() * &u;
        assert!(uu.leading_block(inner).max_abs_diff(&OperatorMatrix::identity(inner)) < 1e-8);
    }

    #[test]
    fn rotation_is_diagonal_phase() {
        let t = FockTruncation::new(5).unwrap();
        let p = SystemParams::new(0.02, 2e-4, 1.0).unwrap();
        let u = rotation_unitary(&p, 0.8, t);
        let k = t.index(1, 3);
        let want = c64::from_polar(1.0, 0.5 * p.omega_p * 3.5 * 0.8);
        assert!((u.get(k, k) - want).norm() < 1e-15);
        assert!(u.get(k, k + 1).norm() == 0.0);
    }
}

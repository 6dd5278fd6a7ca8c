use num_complex::Complex64 as c64;

use super::params::{derive_params, SystemParams};
use crate::quantum::{FockTruncation, OperatorMatrix};

type Qubit = [[f64; 2]; 2];

const SIGMA_Z: Qubit = [[-1.0, 0.0], [0.0, 1.0]];
const ID2: Qubit = [[1.0, 0.0], [0.0, 1.0]];
// |E><G| and |G><E| in (G, E) ordering.
const SIGMA_PLUS: Qubit = [[0.0, 0.0], [1.0, 0.0]];
const SIGMA_MINUS: Qubit = [[0.0, 1.0], [0.0, 0.0]];
const SIGMA_X: Qubit = [[0.0, 1.0], [1.0, 0.0]];
const SIGMA_PM_DIFF: Qubit = [[0.0, -1.0], [1.0, 0.0]];

/// Cavity operator given entrywise: `(n, m) -> value`.
type Cavity = fn(usize, usize) -> f64;

fn number(n: usize, m: usize) -> f64 {
    if n == m {
        n as f64
    } else {
        0.0
    }
}

fn identity(n: usize, m: usize) -> f64 {
    if n == m {
        1.0
    } else {
        0.0
    }
}

/// `a`: `<n|a|m> = sqrt(m)` for `n = m - 1`.
fn lower(n: usize, m: usize) -> f64 {
    if m == n + 1 {
        (m as f64).sqrt()
    } else {
        0.0
    }
}

fn raise(n: usize, m: usize) -> f64 {
    lower(m, n)
}

fn lower2(n: usize, m: usize) -> f64 {
    if m == n + 2 {
        ((m * (m - 1)) as f64).sqrt()
    } else {
        0.0
    }
}

fn raise2(n: usize, m: usize) -> f64 {
    lower2(m, n)
}

fn position(n: usize, m: usize) -> f64 {
    lower(n, m) + raise(n, m)
}

/// `a_dag - a`.
fn momentum_like(n: usize, m: usize) -> f64 {
    raise(n, m) - lower(n, m)
}

fn two_photon(n: usize, m: usize) -> f64 {
    lower2(n, m) + raise2(n, m)
}

/// Sum of `coef * qubit ⊗ cavity` terms assembled in one pass.
fn assemble(trunc: FockTruncation, terms: &[(c64, Qubit, Cavity)]) -> OperatorMatrix {
    OperatorMatrix::from_fn(trunc.dim(), |i, j| {
        let (s, n) = trunc.split(i);
        let (sp, m) = trunc.split(j);
        terms
            .iter()
            .filter(|(_, q, _)| q[s][sp] != 0.0)
            .map(|(c, q, cav)| *c * (q[s][sp] * cav(n, m)))
            .sum()
    })
}

fn re(x: f64) -> c64 {
    c64::new(x, 0.0)
}

fn rabi_terms(p: &SystemParams) -> [(c64, Qubit, Cavity); 3] {
    let d = derive_params(p);
    [
        (re(0.5 * p.delta_a), SIGMA_Z, identity),
        (re(d.omega_c_eff), ID2, number),
        (re(d.g_tilde), SIGMA_X, position),
    ]
}

fn err_term(p: &SystemParams) -> (c64, Qubit, Cavity) {
    (re(-0.5 * p.g * (-p.r).exp()), SIGMA_PM_DIFF, momentum_like)
}

/// Effective quantum Rabi part `(δa/2)σz + Ωc a†a + g̃(a†+a)(σ+ + σ−)`.
pub fn build_h_rabi(p: &SystemParams, trunc: FockTruncation) -> OperatorMatrix {
    assemble(trunc, &rabi_terms(p))
}

/// Counter-term `−(g/2)e^{−r}(a†−a)(σ+ − σ−)`.
pub fn build_h_err(p: &SystemParams, trunc: FockTruncation) -> OperatorMatrix {
    assemble(trunc, &[err_term(p)])
}

/// `H_Rabi + H_err`, the squeezed-frame Hamiltonian without its constant shift.
pub fn build_h_eff(p: &SystemParams, trunc: FockTruncation) -> OperatorMatrix {
    build_h_perturbed(p, trunc, 1.0)
}

/// `H_Rabi + err_scale * H_err`.
pub fn build_h_perturbed(p: &SystemParams, trunc: FockTruncation, err_scale: f64) -> OperatorMatrix {
    let [a, b, c] = rabi_terms(p);
    let (coef, q, cav) = err_term(p);
    assemble(trunc, &[a, b, c, (coef * err_scale, q, cav)])
}

/// Rotating-frame Hamiltonian
/// `(δa/2)σz + δc a†a + g(a†σ− + aσ+) − (λ/2)(a†² + a²)`.
pub fn build_h_rotated(p: &SystemParams, trunc: FockTruncation) -> OperatorMatrix {
    assemble(
        trunc,
        &[
            (re(0.5 * p.delta_a), SIGMA_Z, identity),
            (re(p.delta_c()), ID2, number),
            (re(p.g), SIGMA_MINUS, raise),
            (re(p.g), SIGMA_PLUS, lower),
            (re(-0.5 * p.lambda()), ID2, two_photon),
        ],
    )
}

/// Lab-frame Hamiltonian at time `t`, dense.
pub fn build_h_lab(p: &SystemParams, t: f64, trunc: FockTruncation) -> OperatorMatrix {
    let phase = c64::from_polar(1.0, -p.omega_p * t);
    let amp = -0.5 * p.lambda();
    assemble(
        trunc,
        &[
            (re(0.5 * p.omega_a()), SIGMA_Z, identity),
            (re(p.omega_c()), ID2, number),
            (re(p.g), SIGMA_MINUS, raise),
            (re(p.g), SIGMA_PLUS, lower),
            (amp * phase, ID2, raise2),
            (amp * phase.conj(), ID2, lower2),
        ],
    )
}

/// Total excitation number `a†a + σ+σ−`.
pub fn excitation_number(trunc: FockTruncation) -> OperatorMatrix {
    const EXCITED: Qubit = [[0.0, 0.0], [0.0, 1.0]];
    assemble(trunc, &[(re(1.0), ID2, number), (re(1.0), EXCITED, identity)])
}

/// Matrix-free lab-frame Hamiltonian. Applies `H_lab(t)` in O(dim).
#[derive(Debug, Clone)]
pub struct LabHamiltonian {
    params: SystemParams,
    trunc: FockTruncation,
    sqrt: Vec<f64>,
}

impl LabHamiltonian {
    pub fn new(params: SystemParams, trunc: FockTruncation) -> Self {
        let sqrt = (0..=trunc.n_max() + 2).map(|n| (n as f64).sqrt()).collect();
        Self {
            params,
            trunc,
            sqrt,
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn trunc(&self) -> FockTruncation {
        self.trunc
    }

    pub fn dim(&self) -> usize {
        self.trunc.dim()
    }

    /// `out = H_lab(t) psi`.
    pub fn apply(&self, t: f64, psi: &[c64], out: &mut [c64]) {
        let p = &self.params;
        let nm = self.trunc.n_max();
        let d = nm + 1;
        let s = &self.sqrt;
        let half_wa = 0.5 * p.omega_a();
        let wc = p.omega_c();
        let g = p.g;
        let amp = -0.5 * p.lambda();
        let up = c64::from_polar(amp, -p.omega_p * t);
        let down = up.conj();
        for q in 0..2 {
            let sign = if q == 0 { -1.0 } else { 1.0 };
            let base = q * d;
            for n in 0..d {
                let mut acc = psi[base + n] * (sign * half_wa + wc * n as f64);
                if n >= 2 {
                    acc += up * psi[base + n - 2] * (s[n] * s[n - 1]);
                }
                if n + 2 <= nm {
                    acc += down * psi[base + n + 2] * (s[n + 1] * s[n + 2]);
                }
                if q == 0 {
                    // σ− a†: |E, n−1> -> sqrt(n) |G, n>
                    if n >= 1 {
                        acc += psi[d + n - 1] * (g * s[n]);
                    }
                } else if n < nm {
                    // σ+ a: |G, n+1> -> sqrt(n+1) |E, n>
                    acc += psi[n + 1] * (g * s[n + 1]);
                }
                out[base + n] = acc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{build_operators, tensor};

    fn params(delta_a: f64, g: f64, r: f64) -> SystemParams {
        SystemParams::new(delta_a, g, r).unwrap()
    }

    #[test]
    fn effective_is_rabi_plus_error() {
        let t = FockTruncation::new(30).unwrap();
        for p in [params(0.02, 2e-4, 4.0), params(0.02, 0.1, 2.0), params(0.7, 0.3, 0.4)] {
            let sum = &build_h_rabi(&p, t) + &build_h_err(&p, t);
            let eff = build_h_eff(&p, t);
            assert!(eff.max_abs_diff(&sum) < 1e-12);
            for h in [&eff, &build_h_rabi(&p, t), &build_h_err(&p, t)] {
                assert!(h.hermitian_deviation() < 1e-12);
            }
        }
    }

    #[test]
    fn unsqueezed_effective_equals_rotated_jcm() {
        let t = FockTruncation::new(25).unwrap();
        let p = params(0.02, 0.13, 0.0);
        let diff = build_h_eff(&p, t).max_abs_diff(&build_h_rotated(&p, t));
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn builders_match_operator_algebra() {
        let ops = build_operators(12).unwrap();
        let t = ops.trunc;
        let p = params(0.3, 0.11, 0.35);
        let d = derive_params(&p);
        let kron = |q: &OperatorMatrix, c: &OperatorMatrix| tensor(q, c).unwrap();
        let x = &ops.a + &ops.a_dag;
        let rabi = &(&(0.5 * p.delta_a * &kron(&ops.sigma_z, &ops.cavity_identity))
            + &(d.omega_c_eff * &kron(&ops.qubit_identity, &ops.num)))
            + &(d.g_tilde * &kron(&ops.sigma_x, &x));
        assert!(build_h_rabi(&p, t).max_abs_diff(&rabi) < 1e-14);

        let err = -0.5 * p.g * (-p.r).exp()
            * &kron(&(&ops.sigma_plus - &ops.sigma_minus), &(&ops.a_dag - &ops.a));
        assert!(build_h_err(&p, t).max_abs_diff(&err) < 1e-14);

        let a2 = &ops.a * &ops.a;
        let ad2 = &ops.a_dag * &ops.a_dag;
        let rot = &(&(&(0.5 * p.delta_a * &kron(&ops.sigma_z, &ops.cavity_identity))
            + &kron(&ops.qubit_identity, &ops.num))
            + &(p.g * &(&kron(&ops.sigma_minus, &ops.a_dag) + &kron(&ops.sigma_plus, &ops.a))))
            - &(0.5 * p.lambda() * &kron(&ops.qubit_identity, &(&a2 + &ad2)));
        assert!(build_h_rotated(&p, t).max_abs_diff(&rot) < 1e-14);
    }

    #[test]
    fn vacuum_ground_energy() {
        let t = FockTruncation::new(8).unwrap();
        let p = params(0.02, 2e-4, 4.0);
        let h = build_h_rabi(&p, t);
        assert!((h.get(0, 0).re + 0.01).abs() < 1e-15);
    }

    #[test]
    fn rotated_frame_examples() {
        let t = FockTruncation::new(10).unwrap();
        let p = params(0.3, 0.0, 0.0);
        let h = build_h_rotated(&p, t);
        for k in 0..t.dim() {
            let (s, n) = t.split(k);
            let expect = if s == 0 { -0.15 } else { 0.15 } + n as f64;
            assert!((h.get(k, k).re - expect).abs() < 1e-15);
            for j in 0..t.dim() {
                if j != k {
                    assert_eq!(h.get(k, j), c64::new(0.0, 0.0));
                }
            }
        }
        let driven = SystemParams::from_lambda(0.3, 0.2, 0.5).unwrap();
        assert!(build_h_rotated(&driven, t).hermitian_deviation() < 1e-12);
    }

    #[test]
    fn jcm_conserves_excitations() {
        let t = FockTruncation::new(15).unwrap();
        let h = build_h_rotated(&params(0.3, 0.2, 0.0), t);
        let n = excitation_number(t);
        assert!(h.commutator(&n).max_abs() < 1e-14);
    }

    #[test]
    fn lab_drive_phase() {
        let t = FockTruncation::new(10).unwrap();
        let p = SystemParams::from_lambda(0.3, 0.2, 0.5)
            .unwrap()
            .with_drive_frequency(1.7)
            .unwrap();
        let h0 = build_h_lab(&p, 0.0, t);
        let h1 = build_h_lab(&p, std::f64::consts::PI / p.omega_p, t);
        // <0|H|2> carries −(λ/2) sqrt(2) at t = 0 and the opposite sign half a period later.
        let k0 = t.index(0, 0);
        let k2 = t.index(0, 2);
        assert!((h0.get(k2, k0) - c64::new(-0.25 * 2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((h1.get(k2, k0) - c64::new(0.25 * 2f64.sqrt(), 0.0)).norm() < 1e-14);
        for tt in [0.0, 0.3, 2.9, 17.0] {
            assert!(build_h_lab(&p, tt, t).hermitian_deviation() < 1e-12);
        }

        let undriven = SystemParams::new(0.3, 0.2, 0.0).unwrap();
        let a = build_h_lab(&undriven, 0.0, t);
        let b = build_h_lab(&undriven, 5.3, t);
        assert!(a.max_abs_diff(&b) == 0.0);
    }

    #[test]
    fn matrix_free_lab_matches_dense() {
        let t = FockTruncation::new(9).unwrap();
        let p = SystemParams::from_lambda(0.3, 0.2, 0.6)
            .unwrap()
            .with_drive_frequency(1.3)
            .unwrap();
        let lab = LabHamiltonian::new(p, t);
        let psi: Vec<c64> = (0..t.dim())
            .map(|k| c64::new((k as f64 * 0.37).sin(), (k as f64 * 0.91).cos()))
            .collect();
        let mut out = vec![c64::new(0.0, 0.0); t.dim()];
        for tt in [0.0, 0.4, 3.3] {
            lab.apply(tt, &psi, &mut out);
            let dense = build_h_lab(&p, tt, t).apply(&psi).unwrap();
            for (x, y) in out.iter().zip(&dense) {
                assert!((x - y).norm() < 1e-13);
            }
        }
    }
}

use std::ops::{Add, Mul, Neg, Sub};

use faer::Mat;
use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

/// Tolerance used to set the Hermitian flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Hard-cutoff Fock truncation `|0>, ..., |n_max>` for the cavity.
///
/// Full-space states use a qubit-major flat index
/// `k = s * (n_max + 1) + n`, with `s = 0` for `|G>` and `s = 1` for `|E>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FockTruncation {
    n_max: usize,
}

impl FockTruncation {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidTruncation(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn cavity_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.cavity_dim()
    }

    pub fn index(&self, qubit: usize, photons: usize) -> usize {
        debug_assert!(qubit < 2 && photons <= self.n_max);
        qubit * self.cavity_dim() + photons
    }

    /// Inverse of [`index`](Self::index): `(qubit, photons)`.
    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.cavity_dim(), k % self.cavity_dim())
    }

    /// Truncation for a full-space dimension `dim = 2 (n_max + 1)`.
    pub fn from_dim(dim: usize) -> Result<Self> {
        if dim % 2 != 0 || dim < 4 {
            return Err(Error::DimensionMismatch {
                expected: 2 * (dim / 2).max(2),
                found: dim,
            });
        }
        Self::new(dim / 2 - 1)
    }
}

/// Dense complex operator. The Hermitian flag is computed from the entries,
/// never assumed.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    mat: Mat<c64>,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(mat: Mat<c64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operators are square");
        let hermitian = hermitian_deviation(&mat) < HERMITIAN_TOL;
        Self { mat, hermitian }
    }

    /// Wraps `mat`, failing unless it is Hermitian within [`HERMITIAN_TOL`].
    pub fn hermitian(mat: Mat<c64>) -> Result<Self> {
        let op = Self::new(mat);
        if !op.hermitian {
            return Err(Error::NotHermitian {
                deviation: op.hermitian_deviation(),
            });
        }
        Ok(op)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Self {
        Self::new(Mat::from_fn(dim, dim, f))
    }

    pub fn from_real_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::new(Mat::from_fn(dim, dim, |i, j| c64::new(f(i, j), 0.0)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: Mat::zeros(dim, dim),
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: Mat::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn diagonal(values: &[c64]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| if i == j { values[i] } else { c64::new(0.0, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Mat<c64> {
        &self.mat
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.mat)
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| col(&self.mat, j).iter().all(|z| z.im == 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint().to_owned(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, s: c64) -> Self {
        Self::new(Mat::from_fn(self.dim(), self.dim(), |i, j| s * self.mat[(i, j)]))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            mat: Mat::from_fn(self.dim(), self.dim(), |i, j| self.mat[(i, j)] * s),
            hermitian: self.hermitian,
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .flat_map(|j| col(&self.mat, j).iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let n = self.dim();
        let mut m: f64 = 0.0;
        for j in 0..n {
            for (a, b) in col(&self.mat, j).iter().zip(col(&other.mat, j)) {
                m = m.max((a - b).norm());
            }
        }
        m
    }

    /// `M v` for a raw amplitude vector.
    pub fn apply(&self, v: &[c64]) -> Result<Vec<c64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        let mut out = vec![c64::new(0.0, 0.0); n];
        for (j, &x) in v.iter().enumerate() {
            if x == c64::new(0.0, 0.0) {
                continue;
            }
            for (o, m) in out.iter_mut().zip(col(&self.mat, j)) {
                *o += m * x;
            }
        }
        Ok(out)
    }

    /// Restriction to rows and columns `0..k`.
    pub fn leading_block(&self, k: usize) -> Self {
        Self::new(self.mat.as_ref().submatrix(0, 0, k, k).to_owned())
    }
}

pub(crate) fn col(m: &Mat<c64>, j: usize) -> &[c64] {
    m.col(j)
        .try_as_col_major()
        .expect("owned matrices are column-major")
        .as_slice()
}

fn hermitian_deviation(m: &Mat<c64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        OperatorMatrix::new(&self.mat + &rhs.mat)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        OperatorMatrix::new(&self.mat - &rhs.mat)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        OperatorMatrix::new(&self.mat * &rhs.mat)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale_real(-1.0)
    }
}

impl Mul<&OperatorMatrix> for f64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        rhs.scale_real(self)
    }
}

impl Mul<&OperatorMatrix> for c64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        rhs.scale(self)
    }
}

/// `qubit_op ⊗ cavity_op` in the qubit-major basis.
pub fn tensor(qubit_op: &OperatorMatrix, cavity_op: &OperatorMatrix) -> Result<OperatorMatrix> {
    if qubit_op.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: qubit_op.dim(),
        });
    }
    let d = cavity_op.dim();
    if d < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d,
        });
    }
    let mat = Mat::from_fn(2 * d, 2 * d, |i, j| {
        let q = qubit_op.mat[(i / d, j / d)];
        if q == c64::new(0.0, 0.0) {
            q
        } else {
            q * cavity_op.mat[(i % d, j % d)]
        }
    });
    Ok(OperatorMatrix {
        mat,
        hermitian: qubit_op.hermitian && cavity_op.hermitian,
    })
}

/// Cavity, qubit and full-space ladder operators for one truncation.
#[derive(Debug, Clone)]
pub struct Operators {
    pub trunc: FockTruncation,
    /// Cavity annihilation operator with `a|n> = sqrt(n)|n-1>`.
    pub a: OperatorMatrix,
    /// Creation operator; `a_dag|n_max> = 0` (hard cutoff).
    pub a_dag: OperatorMatrix,
    pub num: OperatorMatrix,
    pub cavity_identity: OperatorMatrix,
    pub sigma_z: OperatorMatrix,
    pub sigma_plus: OperatorMatrix,
    pub sigma_minus: OperatorMatrix,
    pub sigma_x: OperatorMatrix,
    pub qubit_identity: OperatorMatrix,
}

impl Operators {
    pub fn new(trunc: FockTruncation) -> Self {
        let d = trunc.cavity_dim();
        let a = annihilation(d);
        let a_dag = a.adjoint();
        let num = OperatorMatrix::from_real_fn(d, |i, j| if i == j { i as f64 } else { 0.0 });
        let one = c64::new(1.0, 0.0);
        let zero = c64::new(0.0, 0.0);
        let sigma_z = OperatorMatrix::diagonal(&[-one, one]);
        // |E><G| in (G, E) ordering.
        let sigma_plus = OperatorMatrix::from_fn(2, |i, j| if i == 1 && j == 0 { one } else { zero });
        let sigma_minus = sigma_plus.adjoint();
        let sigma_x = &sigma_plus + &sigma_minus;
        Self {
            trunc,
            a,
            a_dag,
            num,
            cavity_identity: OperatorMatrix::identity(d),
            sigma_z,
            sigma_plus,
            sigma_minus,
            sigma_x,
            qubit_identity: OperatorMatrix::identity(2),
        }
    }

    /// `qubit_op ⊗ 1_cavity`.
    pub fn embed_qubit(&self, op: &OperatorMatrix) -> OperatorMatrix {
        tensor(op, &self.cavity_identity).expect("qubit operators are 2x2")
    }

    /// `1_qubit ⊗ cavity_op`.
    pub fn embed_cavity(&self, op: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(op.dim(), self.trunc.cavity_dim());
        tensor(&self.qubit_identity, op).expect("cavity dimension checked")
    }

    pub fn identity(&self) -> OperatorMatrix {
        OperatorMatrix::identity(self.trunc.dim())
    }

    /// Quadrature `(a + a_dag) / 2` on the cavity.
    pub fn quadrature(&self) -> OperatorMatrix {
        0.5 * &(&self.a + &self.a_dag)
    }
}

/// Builds the operator set, rejecting `n_max < 1`.
pub fn build_operators(n_max: usize) -> Result<Operators> {
    Ok(Operators::new(FockTruncation::new(n_max)?))
}

pub(crate) fn annihilation(d: usize) -> OperatorMatrix {
    OperatorMatrix::from_real_fn(d, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(dim: usize, k: usize) -> Vec<c64> {
        let mut v = vec![c64::new(0.0, 0.0); dim];
        v[k] = c64::new(1.0, 0.0);
        v
    }

    #[test]
    fn rejects_empty_truncation() {
        assert!(matches!(build_operators(0), Err(Error::InvalidTruncation(0))));
        assert!(FockTruncation::new(1).is_ok());
    }

    #[test]
    fn flat_index_is_qubit_major() {
        let t = FockTruncation::new(4).unwrap();
        assert_eq!(t.dim(), 10);
        assert_eq!(t.index(0, 0), 0);
        assert_eq!(t.index(0, 4), 4);
        assert_eq!(t.index(1, 0), 5);
        assert_eq!(t.index(1, 3), 8);
        assert_eq!(t.split(8), (1, 3));
    }

    #[test]
    fn ladder_actions() {
        let ops = build_operators(5).unwrap();
        let one = ops.a.apply(&basis(6, 1)).unwrap();
        assert_eq!(one, basis(6, 0));
        let up = ops.a_dag.apply(&basis(6, 3)).unwrap();
        assert!((up[4].re - 2.0).abs() < 1e-15);
        let edge = ops.a_dag.apply(&basis(6, 5)).unwrap();
        assert!(edge.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn canonical_commutator_away_from_edge() {
        let ops = build_operators(8).unwrap();
        let c = ops.a.commutator(&ops.a_dag);
        let interior = c.leading_block(8);
        assert!(interior.max_abs_diff(&OperatorMatrix::identity(8)) < 1e-14);
        // The truncation edge carries -n_max.
        assert!((c.get(8, 8).re + 8.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_algebra() {
        let ops = build_operators(1).unwrap();
        let anti = &(&ops.sigma_plus * &ops.sigma_minus) + &(&ops.sigma_minus * &ops.sigma_plus);
        assert!(anti.max_abs_diff(&ops.qubit_identity) < 1e-15);
        // sigma_z |E> = |E>, sigma_z |G> = -|G>, sigma_+ |G> = |E>.
        assert_eq!(ops.sigma_z.apply(&basis(2, 1)).unwrap(), basis(2, 1));
        assert_eq!(ops.sigma_z.get(0, 0).re, -1.0);
        assert_eq!(ops.sigma_plus.apply(&basis(2, 0)).unwrap(), basis(2, 1));
    }

    #[test]
    fn tensor_examples() {
        let ops = build_operators(4).unwrap();
        let t = ops.trunc;
        let id = tensor(&ops.qubit_identity, &ops.cavity_identity).unwrap();
        assert!(id.max_abs_diff(&OperatorMatrix::identity(10)) == 0.0);

        let sz = ops.embed_qubit(&ops.sigma_z);
        let g0 = sz.apply(&basis(10, t.index(0, 0))).unwrap();
        assert_eq!(g0[t.index(0, 0)].re, -1.0);

        let n = ops.embed_cavity(&ops.num);
        let e3 = n.apply(&basis(10, t.index(1, 3))).unwrap();
        assert_eq!(e3[t.index(1, 3)].re, 3.0);
        assert!(n.is_hermitian());
    }

    #[test]
    fn tensor_rejects_bad_dims() {
        let ops = build_operators(3).unwrap();
        assert!(tensor(&ops.num, &ops.num).is_err());
    }

    #[test]
    fn hermitian_flag_is_computed() {
        let ops = build_operators(3).unwrap();
        assert!(!ops.a.is_hermitian());
        assert!(ops.quadrature().is_hermitian());
        assert!(OperatorMatrix::hermitian(ops.a.into_mat()).is_err());
    }
}

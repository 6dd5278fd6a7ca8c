use faer::{Mat, Side};
use num_complex::Complex64 as c64;

use super::operators::{col, FockTruncation, OperatorMatrix};
use super::states::KetState;
use crate::error::{Error, Result};

const TRACE_TOL: f64 = 1e-9;
const EIGEN_FLOOR: f64 = -1e-10;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: Mat<c64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and spectrum.
    pub fn new(mat: Mat<c64>) -> Result<Self> {
        let op = OperatorMatrix::new(mat);
        if !op.is_hermitian() {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {:.3e})",
                op.hermitian_deviation()
            )));
        }
        let mat = op.into_mat();
        let tr = trace(&mat);
        if (tr.re - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let eigs = mat
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        if let Some(min) = eigs.iter().copied().reduce(f64::min) {
            if min < EIGEN_FLOOR {
                return Err(Error::InvalidDensityMatrix(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { mat })
    }

    /// `|psi><psi|`.
    pub fn from_ket(psi: &KetState) -> Self {
        let v = psi.amplitudes();
        Self {
            mat: Mat::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj()),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Mat<c64> {
        &self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> c64 {
        trace(&self.mat)
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|j| col(&self.mat, j).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Convex combination `alpha self + (1 - alpha) other`.
    pub fn mix(&self, alpha: f64, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParams(format!("mixing weight {alpha} outside [0, 1]")));
        }
        let n = self.dim();
        Ok(Self {
            mat: Mat::from_fn(n, n, |i, j| {
                self.mat[(i, j)] * alpha + other.mat[(i, j)] * (1.0 - alpha)
            }),
        })
    }

    fn truncation(&self) -> Result<FockTruncation> {
        FockTruncation::from_dim(self.dim())
    }

    /// Qubit state `Tr_cavity rho` (2x2).
    pub fn partial_trace_cavity(&self) -> Result<DensityMatrix> {
        let t = self.truncation()?;
        let d = t.cavity_dim();
        let mat = Mat::from_fn(2, 2, |s, sp| {
            (0..d).map(|n| self.mat[(s * d + n, sp * d + n)]).sum()
        });
        Ok(Self { mat })
    }

    /// Cavity state `Tr_qubit rho` (`(n_max+1)` square).
    pub fn partial_trace_qubit(&self) -> Result<DensityMatrix> {
        let t = self.truncation()?;
        let d = t.cavity_dim();
        let mat = Mat::from_fn(d, d, |n, m| self.mat[(n, m)] + self.mat[(d + n, d + m)]);
        Ok(Self { mat })
    }
}

fn trace(m: &Mat<c64>) -> c64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Cavity reduced density matrix of a full-space ket without forming
/// `|psi><psi|`.
pub fn cavity_reduced(psi: &[c64]) -> Mat<c64> {
    let d = psi.len() / 2;
    let (g, e) = psi.split_at(d);
    Mat::from_fn(d, d, |n, m| g[n] * g[m].conj() + e[n] * e[m].conj())
}

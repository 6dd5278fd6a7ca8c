use faer::{Mat, Side};
use num_complex::Complex64 as c64;

use crate::error::{Error, Result};
use crate::quantum::{col, KetState, OperatorMatrix};

/// Eigencomponents whose summed weight stays below this are skipped during
/// evolution.
const DROP_MASS: f64 = 1e-20;
/// Target size of one batch of evolved states, in complex entries.
const CHUNK_ENTRIES: usize = 1 << 22;

#[derive(Debug, Clone)]
enum Vectors {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

/// One invariant subspace: basis indices plus its eigensystem.
#[derive(Debug, Clone)]
struct Block {
    idx: Vec<usize>,
    values: Vec<f64>,
    vecs: Vectors,
}

impl Block {
    fn len(&self) -> usize {
        self.idx.len()
    }

    fn vector_entry(&self, i: usize, j: usize) -> c64 {
        match &self.vecs {
            Vectors::Real(v) => c64::new(v[(i, j)], 0.0),
            Vectors::Complex(v) => v[(i, j)],
        }
    }

    /// `V† psi` restricted to this block.
    fn project(&self, psi: &[c64]) -> Vec<c64> {
        let m = self.len();
        (0..m)
            .map(|j| {
                (0..m)
                    .map(|i| self.vector_entry(i, j).conj() * psi[self.idx[i]])
                    .sum()
            })
            .collect()
    }
}

/// Eigendecomposition `H = V Λ V†` of a static Hermitian Hamiltonian, used to
/// apply `exp(−iHt)` exactly at arbitrary times.
///
/// The matrix is split into the connected components of its sparsity graph
/// (parity sectors for the Rabi-type Hamiltonians), and each component is
/// diagonalized separately. Real components use a real eigensolver.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    dim: usize,
    blocks: Vec<Block>,
}

/// Diagonalizes a Hermitian operator.
pub fn diagonalize(h: &OperatorMatrix) -> Result<SpectralPropagator> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: h.hermitian_deviation(),
        });
    }
    let dim = h.dim();
    let m = h.mat();
    let mut blocks = Vec::new();
    for idx in components(m) {
        let k = idx.len();
        let real = idx
            .iter()
            .all(|&j| idx.iter().all(|&i| m[(i, j)].im == 0.0));
        let block = if real {
            let sub = Mat::<f64>::from_fn(k, k, |i, j| m[(idx[i], idx[j])].re);
            let evd = sub
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let values = (0..k).map(|i| evd.S()[i]).collect();
            Block {
                idx,
                values,
                vecs: Vectors::Real(evd.U().to_owned()),
            }
        } else {
            let sub = Mat::<c64>::from_fn(k, k, |i, j| m[(idx[i], idx[j])]);
            let evd = sub
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let values = (0..k).map(|i| evd.S()[i].re).collect();
            Block {
                idx,
                values,
                vecs: Vectors::Complex(evd.U().to_owned()),
            }
        };
        blocks.push(block);
    }
    Ok(SpectralPropagator { dim, blocks })
}

/// Connected components of the graph with an edge wherever `m[(i, j)] != 0`.
fn components(m: &Mat<c64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for j in 0..n {
        for (i, z) in col(m, j).iter().enumerate().skip(j + 1) {
            if z.re != 0.0 || z.im != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = out.len();
            out.push(Vec::new());
        }
        out[label[r]].push(i);
    }
    out
}

impl SpectralPropagator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of invariant blocks found.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// All eigenvalues in nondecreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.sorted_pairs().into_iter().map(|(v, _, _)| v).collect()
    }

    /// Eigenvectors as columns of a `dim x dim` matrix, ordered like
    /// [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> Mat<c64> {
        let pairs = self.sorted_pairs();
        let mut v = Mat::<c64>::zeros(self.dim, self.dim);
        for (c, &(_, b, j)) in pairs.iter().enumerate() {
            let block = &self.blocks[b];
            for (i, &row) in block.idx.iter().enumerate() {
                v[(row, c)] = block.vector_entry(i, j);
            }
        }
        v
    }

    fn sorted_pairs(&self) -> Vec<(f64, usize, usize)> {
        let mut pairs: Vec<_> = self
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| blk.values.iter().enumerate().map(move |(j, &v)| (v, b, j)))
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        pairs
    }

    /// `max |V Λ V† − H|`.
    pub fn reconstruction_residual(&self, h: &OperatorMatrix) -> f64 {
        let mut rebuilt = Mat::<c64>::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let k = b.len();
            for i in 0..k {
                for j in 0..k {
                    let z: c64 = (0..k)
                        .map(|l| b.vector_entry(i, l) * b.values[l] * b.vector_entry(j, l).conj())
                        .sum();
                    rebuilt[(b.idx[i], b.idx[j])] = z;
                }
            }
        }
        OperatorMatrix::new(rebuilt).max_abs_diff(h)
    }

    /// `max |V†V − I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in &self.blocks {
            let k = b.len();
            for i in 0..k {
                for j in 0..k {
                    let z: c64 = (0..k)
                        .map(|l| b.vector_entry(l, i).conj() * b.vector_entry(l, j))
                        .sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((z - target).norm());
                }
            }
        }
        worst
    }

    /// Dense `exp(−iHt)`.
    pub fn unitary(&self, t: f64) -> OperatorMatrix {
        let mut u = Mat::<c64>::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let k = b.len();
            let phases: Vec<c64> = b.values.iter().map(|&l| c64::from_polar(1.0, -l * t)).collect();
            for i in 0..k {
                for j in 0..k {
                    u[(b.idx[i], b.idx[j])] = (0..k)
                        .map(|l| b.vector_entry(i, l) * phases[l] * b.vector_entry(j, l).conj())
                        .sum();
                }
            }
        }
        OperatorMatrix::new(u)
    }

    /// Expands `psi0` in the eigenbasis, ready for repeated evaluation.
    pub fn prepare(&self, psi0: &KetState) -> Result<Evolution<'_>> {
        if psi0.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: psi0.dim(),
            });
        }
        let psi = psi0.amplitudes();
        let budget = DROP_MASS / self.blocks.len().max(1) as f64;
        let parts = self
            .blocks
            .iter()
            .map(|b| {
                let c = b.project(psi);
                let mut order: Vec<usize> = (0..c.len()).collect();
                order.sort_by(|&x, &y| c[x].norm_sqr().total_cmp(&c[y].norm_sqr()));
                let mut dropped = 0.0;
                let mut skip = 0;
                for &j in &order {
                    dropped += c[j].norm_sqr();
                    if dropped > budget {
                        break;
                    }
                    skip += 1;
                }
                let mut keep: Vec<usize> = order[skip..].to_vec();
                keep.sort_unstable();
                let coeffs = keep.iter().map(|&j| c[j]).collect();
                let values = keep.iter().map(|&j| b.values[j]).collect();
                let vecs = match &b.vecs {
                    Vectors::Real(v) => {
                        Vectors::Real(Mat::from_fn(b.len(), keep.len(), |i, j| v[(i, keep[j])]))
                    }
                    Vectors::Complex(v) => {
                        Vectors::Complex(Mat::from_fn(b.len(), keep.len(), |i, j| v[(i, keep[j])]))
                    }
                };
                Part {
                    idx: &b.idx,
                    values,
                    coeffs,
                    vecs,
                }
            })
            .collect();
        Ok(Evolution {
            dim: self.dim,
            parts,
        })
    }

    /// `exp(−iHt) psi0`.
    pub fn evolve(&self, psi0: &KetState, t: f64) -> Result<KetState> {
        Ok(self.prepare(psi0)?.state_at(t))
    }

    /// States at each of `times`.
    pub fn evolve_series(&self, psi0: &KetState, times: &[f64]) -> Result<Vec<KetState>> {
        let ev = self.prepare(psi0)?;
        let mut out = Vec::with_capacity(times.len());
        ev.for_each(times, |_, _, psi| {
            out.push(KetState::from_unitary_image(psi.to_vec()))
        });
        Ok(out)
    }

    /// `<psi|H|psi>` from the eigen-expansion.
    pub fn energy(&self, psi: &KetState) -> Result<f64> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: psi.dim(),
            });
        }
        Ok(self
            .blocks
            .iter()
            .map(|b| {
                b.project(psi.amplitudes())
                    .iter()
                    .zip(&b.values)
                    .map(|(c, l)| c.norm_sqr() * l)
                    .sum::<f64>()
            })
            .sum())
    }
}

#[derive(Debug, Clone)]
struct Part<'a> {
    idx: &'a [usize],
    values: Vec<f64>,
    coeffs: Vec<c64>,
    vecs: Vectors,
}

/// An initial state expanded in the eigenbasis of a [`SpectralPropagator`].
#[derive(Debug, Clone)]
pub struct Evolution<'a> {
    dim: usize,
    parts: Vec<Part<'a>>,
}

impl Evolution<'_> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of eigencomponents retained.
    pub fn active_components(&self) -> usize {
        self.parts.iter().map(|p| p.values.len()).sum()
    }

    /// `<psi0|psi(t)>`, from the expansion alone.
    pub fn autocorrelation(&self, t: f64) -> c64 {
        self.parts
            .iter()
            .flat_map(|p| p.coeffs.iter().zip(&p.values))
            .map(|(c, &l)| c64::from_polar(c.norm_sqr(), -l * t))
            .sum()
    }

    pub fn state_at(&self, t: f64) -> KetState {
        KetState::from_unitary_image(self.chunk(&[t]))
    }

    /// States at `times` as one column-major `dim x times.len()` buffer.
    pub fn chunk(&self, times: &[f64]) -> Vec<c64> {
        let nt = times.len();
        let mut out = vec![c64::new(0.0, 0.0); self.dim * nt];
        for p in &self.parts {
            let k = p.values.len();
            if k == 0 {
                continue;
            }
            let m = p.idx.len();
            let phase = |j: usize, c: usize| p.coeffs[j] * c64::from_polar(1.0, -p.values[j] * times[c]);
            match &p.vecs {
                Vectors::Real(v) => {
                    let amps: Vec<c64> = (0..k * nt).map(|x| phase(x % k, x / k)).collect();
                    let re = Mat::<f64>::from_fn(k, nt, |j, c| amps[c * k + j].re);
                    let im = Mat::<f64>::from_fn(k, nt, |j, c| amps[c * k + j].im);
                    let yr = v * &re;
                    let yi = v * &im;
                    for c in 0..nt {
                        let dst = &mut out[c * self.dim..(c + 1) * self.dim];
                        for i in 0..m {
                            dst[p.idx[i]] = c64::new(yr[(i, c)], yi[(i, c)]);
                        }
                    }
                }
                Vectors::Complex(v) => {
                    let a = Mat::<c64>::from_fn(k, nt, |j, c| phase(j, c));
                    let y = v * &a;
                    for c in 0..nt {
                        let dst = &mut out[c * self.dim..(c + 1) * self.dim];
                        for i in 0..m {
                            dst[p.idx[i]] = y[(i, c)];
                        }
                    }
                }
            }
        }
        out
    }

    /// Calls `f(i, times[i], psi(times[i]))` in order, evaluating states in
    /// batches.
    pub fn for_each(&self, times: &[f64], mut f: impl FnMut(usize, f64, &[c64])) {
        let batch = (CHUNK_ENTRIES / self.dim.max(1)).max(1);
        let mut start = 0;
        for ts in times.chunks(batch) {
            let buf = self.chunk(ts);
            for (c, &t) in ts.iter().enumerate() {
                f(start + c, t, &buf[c * self.dim..(c + 1) * self.dim]);
            }
            start += ts.len();
        }
    }
}

/// Iterates two evolutions over the same time grid in lockstep.
pub fn for_each_pair(
    a: &Evolution<'_>,
    b: &Evolution<'_>,
    times: &[f64],
    mut f: impl FnMut(usize, f64, &[c64], &[c64]),
) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    let batch = (CHUNK_ENTRIES / (2 * a.dim.max(1))).max(1);
    let mut start = 0;
    for ts in times.chunks(batch) {
        let ba = a.chunk(ts);
        let bb = b.chunk(ts);
        let d = a.dim;
        for (c, &t) in ts.iter().enumerate() {
            f(start + c, t, &ba[c * d..(c + 1) * d], &bb[c * d..(c + 1) * d]);
        }
        start += ts.len();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{inner, FockTruncation};

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let h = OperatorMatrix::diagonal(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let p = diagonalize(&h).unwrap();
        assert_eq!(p.eigenvalues(), vec![1.0, 2.0]);
        let v = p.eigenvectors();
        assert_eq!(v[(0, 0)].norm(), 1.0);
        assert_eq!(v[(1, 1)].norm(), 1.0);
        assert_eq!(v[(0, 1)].norm(), 0.0);
        assert_eq!(p.block_count(), 2);
    }

    #[test]
    fn pauli_x() {
        let h = OperatorMatrix::from_real_fn(2, |i, j| if i != j { 1.0 } else { 0.0 });
        let e = diagonalize(&h).unwrap().eigenvalues();
        assert!((e[0] + 1.0).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = OperatorMatrix::from_real_fn(2, |i, j| if i == 0 && j == 1 { 1.0 } else { 0.0 });
        assert!(matches!(diagonalize(&h), Err(Error::NotHermitian { .. })));
    }

    fn random_hermitian(n: usize, seed: u64, complex: bool) -> OperatorMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw = Mat::<c64>::from_fn(n, n, |_, _| {
            let im = if complex { rng.gen_range(-1.0..1.0) } else { 0.0 };
            c(rng.gen_range(-1.0..1.0), im)
        });
        OperatorMatrix::hermitian(Mat::from_fn(n, n, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5))
            .unwrap()
    }

    fn random_ket(n: usize, seed: u64) -> KetState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        KetState::normalized((0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
            .unwrap()
    }

    #[test]
    fn decomposition_invariants() {
        for complex in [false, true] {
            let h = random_hermitian(40, 7, complex);
            let p = diagonalize(&h).unwrap();
            assert!(p.reconstruction_residual(&h) < 1e-9 * h.max_abs());
            assert!(p.orthonormality_residual() < 1e-10);
        }
    }

    #[test]
    fn evolution_matches_dense_unitary_and_group_law() {
        for complex in [false, true] {
            let h = random_hermitian(30, 3, complex);
            let p = diagonalize(&h).unwrap();
            let psi = random_ket(30, 11);
            let same = p.evolve(&psi, 0.0).unwrap();
            for (x, y) in same.amplitudes().iter().zip(psi.amplitudes()) {
                assert!((x - y).norm() < 1e-13);
            }
            let direct = p.evolve(&psi, 2.7).unwrap();
            let via_u = p.unitary(2.7).apply(psi.amplitudes()).unwrap();
            for (x, y) in direct.amplitudes().iter().zip(&via_u) {
                assert!((x - y).norm() < 1e-12);
            }
            let half = p.evolve(&psi, 1.1).unwrap();
            let twice = p.evolve(&half, 1.6).unwrap();
            for (x, y) in direct.amplitudes().iter().zip(twice.amplitudes()) {
                assert!((x - y).norm() < 1e-9);
            }
            assert!((direct.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenstates_only_acquire_phase() {
        let h = random_hermitian(12, 5, true);
        let p = diagonalize(&h).unwrap();
        let v = p.eigenvectors();
        let e = p.eigenvalues();
        let psi = KetState::new(col(&v, 4).to_vec()).unwrap();
        let out = p.evolve(&psi, 13.0).unwrap();
        let ov = inner(psi.amplitudes(), out.amplitudes());
        assert!((ov - c64::from_polar(1.0, -e[4] * 13.0)).norm() < 1e-12);
        for (x, y) in psi.amplitudes().iter().zip(out.amplitudes()) {
            assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn batched_series_matches_single_evaluations() {
        let h = random_hermitian(25, 9, false);
        let p = diagonalize(&h).unwrap();
        let psi = random_ket(25, 1);
        let times: Vec<f64> = (0..17).map(|i| i as f64 * 0.37).collect();
        let series = p.evolve_series(&psi, &times).unwrap();
        let ev = p.prepare(&psi).unwrap();
        for (t, s) in times.iter().zip(&series) {
            let single = p.evolve(&psi, *t).unwrap();
            for (x, y) in s.amplitudes().iter().zip(single.amplitudes()) {
                assert!((x - y).norm() < 1e-13);
            }
            let ac = ev.autocorrelation(*t);
            assert!((ac - inner(psi.amplitudes(), s.amplitudes())).norm() < 1e-12);
        }
    }

    #[test]
    fn parity_blocks_are_found() {
        use crate::frames::{build_h_eff, SystemParams};
        let t = FockTruncation::new(20).unwrap();
        let pr = SystemParams::new(0.02, 2e-4, 1.5).unwrap();
        let h = build_h_eff(&pr, t);
        let p = diagonalize(&h).unwrap();
        assert_eq!(p.block_count(), 2);
        assert!(p.reconstruction_residual(&h) < 1e-9 * h.max_abs());
        assert!(p.orthonormality_residual() < 1e-10);
        let psi = random_ket(t.dim(), 2);
        let e0 = p.energy(&psi).unwrap();
        let late = p.evolve(&psi, 4e5).unwrap();
        let e1 = p.energy(&late).unwrap();
        assert!((e1 - e0).abs() < 1e-8 * e0.abs());
        assert!((late.norm() - 1.0).abs() < 1e-9);
    }
}

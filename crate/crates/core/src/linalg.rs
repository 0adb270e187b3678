//! Dense complex Hermitian linear algebra at desk scale (dimension up to ~64).
//!
//! Matrices are stored as `nalgebra` complex matrices. Every constructor that
//! produces a [`HermitianOperator`] symmetrizes its output, so Hermiticity holds
//! to machine precision after each operation.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Deref, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for the Hermiticity check on construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for positivity and unit trace of density operators.
pub const DENSITY_TOL: f64 = 1e-10;
/// Default relative eigenvalue cutoff for support projectors.
pub const SUPPORT_TOL: f64 = 1e-9;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr().sqrt()).fold(0.0, f64::max)
}

/// Largest entrywise deviation `|A - A^dagger|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = m[(i, j)] - m[(j, i)].conj();
            dev = dev.max(d.norm_sqr().sqrt());
        }
    }
    dev
}

fn symmetrized(m: CMatrix) -> CMatrix {
    let adj = m.adjoint();
    (m + adj) * c(0.5, 0.0)
}

/// Which factor of a bipartite system to keep when tracing out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Eigendecomposition with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: CMatrix,
}

/// A self-adjoint operator on a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

impl HermitianOperator {
    /// Wraps a matrix, checking squareness and Hermiticity to [`HERMITIAN_TOL`]
    /// (scaled by the largest entry).
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::from_matrix_projected(mat, HERMITIAN_TOL)
    }

    /// Accepts matrices that are Hermitian up to `tol` (relative to the largest
    /// entry) and replaces them by their Hermitian part.
    pub fn from_matrix_projected(mat: CMatrix, tol: f64) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare(mat.nrows(), mat.ncols()));
        }
        if mat.nrows() == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let dev = hermitian_deviation(&mat);
        if dev > tol * max_abs(&mat).max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { mat: symmetrized(mat) })
    }

    pub(crate) fn from_matrix_unchecked(mat: CMatrix) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat: symmetrized(mat) }
    }

    /// Builds an operator from row-major complex entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Self::new(CMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let z: Vec<C64> = entries.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_rows(dim, &z)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: CMatrix::identity(dim, dim) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut mat = CMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = c(d, 0.0);
        }
        Self { mat }
    }

    /// `|i><i|` in dimension `dim`.
    pub fn basis_projector(dim: usize, i: usize) -> Self {
        let mut mat = CMatrix::zeros(dim, dim);
        mat[(i, i)] = c(1.0, 0.0);
        Self { mat }
    }

    /// `|v><v|` for an arbitrary (not necessarily normalized) vector.
    pub fn outer(v: &CVector) -> Self {
        Self::from_matrix_unchecked(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    /// Hilbert-Schmidt inner product `Tr(A B)` (real for Hermitian arguments).
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.mat
            .iter()
            .zip(other.mat.transpose().iter())
            .map(|(a, b)| (a * b).re)
            .sum()
    }

    /// `<v| A |v>` for a vector `v`.
    pub fn expectation(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.mat * v)[(0, 0)].re
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { mat: &self.mat * c(a, 0.0) }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        max_abs(&self.mat)
    }

    /// Entrywise complex conjugate, which equals the transpose for Hermitian operators.
    pub fn transpose(&self) -> Self {
        Self { mat: self.mat.transpose() }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(self.mat.kronecker(&other.mat))
    }

    /// `U A U^dagger`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::from_matrix_unchecked(u * &self.mat * u.adjoint())
    }

    fn check_bipartite(&self, dims: (usize, usize)) -> Result<()> {
        if dims.0 * dims.1 != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: dims.0 * dims.1 });
        }
        Ok(())
    }

    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<Self> {
        self.check_bipartite(dims)?;
        let (da, db) = dims;
        let out = match keep {
            Subsystem::A => CMatrix::from_fn(da, da, |a, a2| {
                (0..db).map(|b| self.mat[(a * db + b, a2 * db + b)]).sum()
            }),
            Subsystem::B => CMatrix::from_fn(db, db, |b, b2| {
                (0..da).map(|a| self.mat[(a * db + b, a * db + b2)]).sum()
            }),
        };
        Ok(Self::from_matrix_unchecked(out))
    }

    /// Transpose on the second tensor factor.
    pub fn partial_transpose(&self, dims: (usize, usize)) -> Result<Self> {
        self.check_bipartite(dims)?;
        self.partial_transpose_parties(&[dims.0, dims.1], &[false, true])
    }

    /// Transpose on every party `k` with `transposed[k] == true` of a
    /// multipartite system with the given local dimensions.
    pub fn partial_transpose_parties(&self, local_dims: &[usize], transposed: &[bool]) -> Result<Self> {
        let total: usize = local_dims.iter().product();
        if total != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: total });
        }
        if transposed.len() != local_dims.len() {
            return Err(Error::DimensionMismatch { expected: local_dims.len(), found: transposed.len() });
        }
        let n = self.dim();
        let digits = |mut idx: usize| {
            let mut out = vec![0usize; local_dims.len()];
            for k in (0..local_dims.len()).rev() {
                out[k] = idx % local_dims[k];
                idx /= local_dims[k];
            }
            out
        };
        let compose = |ds: &[usize]| ds.iter().zip(local_dims).fold(0usize, |acc, (&d, &m)| acc * m + d);
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            let di = digits(i);
            for j in 0..n {
                let dj = digits(j);
                let mut si = di.clone();
                let mut sj = dj.clone();
                for k in 0..local_dims.len() {
                    if transposed[k] {
                        si[k] = dj[k];
                        sj[k] = di[k];
                    }
                }
                out[(i, j)] = self.mat[(compose(&si), compose(&sj))];
            }
        }
        Ok(Self::from_matrix_unchecked(out))
    }

    /// Eigendecomposition with eigenvalues in ascending order.
    pub fn eigh(&self) -> Eigen {
        let eig = SymmetricEigen::new(self.mat.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
        Eigen { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("dimension >= 1")
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Applies a real function to the spectrum.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Self {
        let eig = self.eigh();
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for k in 0..n {
            let fk = f(eig.values[k]);
            if fk == 0.0 {
                continue;
            }
            let v = eig.vectors.column(k);
            out += (v.clone() * v.adjoint()) * c(fk, 0.0);
        }
        Self::from_matrix_unchecked(out)
    }

    /// Projector onto the span of eigenvectors whose eigenvalue exceeds
    /// `tol * max(1, lambda_max)`.
    pub fn support_projector(&self, tol: f64) -> Result<Self> {
        let eig = self.eigh();
        let scale = eig.values.last().copied().unwrap_or(0.0).abs().max(1.0);
        let cutoff = tol * scale;
        if eig.values[0] < -cutoff {
            return Err(Error::NotPsd(eig.values[0]));
        }
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for k in 0..n {
            if eig.values[k] > cutoff {
                let v = eig.vectors.column(k);
                out += v.clone() * v.adjoint();
            }
        }
        Ok(Self::from_matrix_unchecked(out))
    }

    /// Zeroes every entry that couples two different blocks.
    pub fn pinch(&self, blocks: &BlockStructure) -> Result<Self> {
        if blocks.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: blocks.dim() });
        }
        let n = self.dim();
        let owner = blocks.owners();
        let out = CMatrix::from_fn(n, n, |i, j| if owner[i] == owner[j] { self.mat[(i, j)] } else { c(0.0, 0.0) });
        Ok(Self::from_matrix_unchecked(out))
    }

    /// Coordinates in the orthonormal Hermitian basis returned by [`Self::real_basis`]:
    /// diagonal entries first, then `sqrt(2) Re a_ij`, `sqrt(2) Im a_ij` for each `i < j`.
    pub fn to_coords(&self) -> Vec<f64> {
        let n = self.dim();
        let s2 = core::f64::consts::SQRT_2;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            out.push(self.mat[(i, i)].re);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let z = self.mat[(i, j)];
                out.push(s2 * z.re);
                out.push(s2 * z.im);
            }
        }
        out
    }

    pub fn from_coords(dim: usize, coords: &[f64]) -> Result<Self> {
        if coords.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: coords.len() });
        }
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let mut mat = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            mat[(i, i)] = c(coords[i], 0.0);
        }
        let mut k = dim;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let z = c(h * coords[k], h * coords[k + 1]);
                mat[(i, j)] = z;
                mat[(j, i)] = z.conj();
                k += 2;
            }
        }
        Ok(Self { mat })
    }

    /// Orthonormal basis of the real vector space of `dim x dim` Hermitian matrices.
    pub fn real_basis(dim: usize) -> Vec<Self> {
        (0..dim * dim)
            .map(|k| {
                let mut e = vec![0.0; dim * dim];
                e[k] = 1.0;
                Self::from_coords(dim, &e).expect("coordinate length matches")
            })
            .collect()
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: Self) -> HermitianOperator {
        HermitianOperator { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: Self) -> HermitianOperator {
        HermitianOperator { mat: &self.mat - &rhs.mat }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scale(-1.0)
    }
}

/// A unit-trace positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    /// Validates positivity and unit trace to [`DENSITY_TOL`].
    pub fn new(op: HermitianOperator) -> Result<Self> {
        Self::with_tolerance(op, DENSITY_TOL)
    }

    pub fn with_tolerance(op: HermitianOperator, tol: f64) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidTrace(tr));
        }
        let min = op.min_eigenvalue();
        if min < -tol {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { op })
    }

    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(mat)?)
    }

    /// Nearest valid state obtained by clipping negative eigenvalues and
    /// renormalizing the trace. Fails when nothing positive remains.
    pub fn project(op: &HermitianOperator) -> Result<Self> {
        let clipped = op.spectral_map(|x| x.max(0.0));
        let tr = clipped.trace();
        if tr <= 0.0 || !tr.is_finite() {
            return Err(Error::InvalidTrace(tr));
        }
        Ok(Self { op: clipped.scale(1.0 / tr) })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { op: HermitianOperator::identity(dim).scale(1.0 / dim as f64) }
    }

    pub fn basis_state(dim: usize, i: usize) -> Self {
        Self { op: HermitianOperator::basis_projector(dim, i) }
    }

    /// `p * a + (1 - p) * b`.
    pub fn mixture(p: f64, a: &Self, b: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter("mixing weight outside [0, 1]".into()));
        }
        Self::new(&a.op.scale(p) + &b.op.scale(1.0 - p))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn purity(&self) -> f64 {
        self.op.inner(&self.op)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { op: self.op.tensor(&other.op) }
    }
}

impl Deref for DensityOperator {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.op
    }
}

impl From<&PureStateVector> for DensityOperator {
    fn from(psi: &PureStateVector) -> Self {
        psi.density()
    }
}

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStateVector {
    amps: CVector,
}

impl PureStateVector {
    /// Requires unit 2-norm within `1e-12`.
    pub fn new(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if amps.is_empty() || (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    /// Normalizes a nonzero vector.
    pub fn normalize(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if amps.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps: amps / c(norm, 0.0) })
    }

    pub fn from_amplitudes(amps: &[C64]) -> Result<Self> {
        Self::normalize(CVector::from_column_slice(amps))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        let z: Vec<C64> = amps.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_amplitudes(&z)
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut amps = CVector::zeros(dim);
        amps[i] = c(1.0, 0.0);
        Self { amps }
    }

    /// `(1/sqrt(d)) sum_i |i>`.
    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        Self { amps: CVector::from_element(dim, c(a, 0.0)) }
    }

    /// `(1/sqrt(m)) sum_{i<m} |i>|i>` in a `dA x dB` space with `m = min(dA, dB)`.
    pub fn maximally_entangled(da: usize, db: usize) -> Self {
        let m = da.min(db);
        let mut amps = CVector::zeros(da * db);
        let a = 1.0 / (m as f64).sqrt();
        for i in 0..m {
            amps[i * db + i] = c(a, 0.0);
        }
        Self { amps }
    }

    /// `(1/sqrt(d)) sum_i |i>^{⊗n}`.
    pub fn ghz(local_dim: usize, parties: usize) -> Self {
        let total = local_dim.pow(parties as u32);
        let mut amps = CVector::zeros(total);
        let a = 1.0 / (local_dim as f64).sqrt();
        for i in 0..local_dim {
            let idx = (0..parties).fold(0usize, |acc, _| acc * local_dim + i);
            amps[idx] = c(a, 0.0);
        }
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator { op: HermitianOperator::outer(&self.amps) }
    }

    pub fn overlap(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { amps: self.amps.kronecker(&other.amps) }
    }

    /// Same ray with the first non-negligible amplitude real and positive.
    pub fn with_canonical_phase(&self) -> Self {
        let lead = self.amps.iter().find(|z| z.norm_sqr().sqrt() > 1e-12).copied();
        match lead {
            Some(z) => {
                let r = z.norm_sqr().sqrt();
                let phase = c(z.re / r, -z.im / r);
                Self { amps: &self.amps * phase }
            }
            None => self.clone(),
        }
    }
}

/// An ordered partition of `{0, .., dim-1}` into groups of basis indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    dim: usize,
    blocks: Vec<Vec<usize>>,
}

impl BlockStructure {
    pub fn new(dim: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; dim];
        let mut sorted = Vec::with_capacity(blocks.len());
        for mut block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidBlocks("empty block".into()));
            }
            block.sort_unstable();
            for &i in &block {
                if i >= dim {
                    return Err(Error::InvalidBlocks(alloc::format!("index {i} out of range for dimension {dim}")));
                }
                if seen[i] {
                    return Err(Error::InvalidBlocks(alloc::format!("index {i} appears twice")));
                }
                seen[i] = true;
            }
            sorted.push(block);
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidBlocks(alloc::format!("index {i} not covered")));
        }
        Ok(Self { dim, blocks: sorted })
    }

    /// Infers the block structure from the infer dimension `blocks.iter().map(len).sum()`.
    pub fn from_blocks(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let dim = blocks.iter().map(Vec::len).sum();
        Self::new(dim, blocks)
    }

    /// Groups the basis indices of a diagonal Hamiltonian by equal energy
    /// (within `tol`). Blocks are ordered by increasing energy.
    pub fn from_diagonal_hamiltonian(h: &HermitianOperator, tol: f64) -> Result<Self> {
        let n = h.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && h.entry(i, j).norm_sqr().sqrt() > tol {
                    return Err(Error::InvalidParameter("Hamiltonian must be diagonal in the computational basis".into()));
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| h.entry(a, a).re.total_cmp(&h.entry(b, b).re));
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for i in order {
            let e = h.entry(i, i).re;
            match blocks.last_mut() {
                Some(b) if (e - last).abs() <= tol => b.push(i),
                _ => blocks.push(vec![i]),
            }
            last = e;
        }
        Self::new(n, blocks)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block index of every basis index.
    pub fn owners(&self) -> Vec<usize> {
        let mut owner = vec![0; self.dim];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                owner[i] = b;
            }
        }
        owner
    }
}

/// Schmidt decomposition `psi = sum_k s_k |u_k> ⊗ |v_k>`.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    /// Nonnegative, descending, `min(dA, dB)` entries.
    pub coefficients: Vec<f64>,
    pub left: Vec<CVector>,
    pub right: Vec<CVector>,
}

impl SchmidtData {
    pub fn reconstruct(&self) -> CVector {
        let da = self.left.first().map_or(0, |v| v.len());
        let db = self.right.first().map_or(0, |v| v.len());
        let mut out = CVector::zeros(da * db);
        for ((s, u), v) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            out += u.kronecker(v) * c(*s, 0.0);
        }
        out
    }
}

/// Coefficient matrix `M[a][b] = <a b|psi>` of a bipartite vector.
pub(crate) fn coefficient_matrix(psi: &CVector, dims: (usize, usize)) -> CMatrix {
    CMatrix::from_fn(dims.0, dims.1, |a, b| psi[a * dims.1 + b])
}

pub fn schmidt(psi: &PureStateVector, dims: (usize, usize)) -> Result<SchmidtData> {
    if dims.0 * dims.1 != psi.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim(), found: dims.0 * dims.1 });
    }
    let m = coefficient_matrix(psi.amplitudes(), dims);
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^dagger");
    let r = dims.0.min(dims.1);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let coefficients = order.iter().map(|&k| svd.singular_values[k]).collect();
    let left = order.iter().map(|&k| u.column(k).into_owned()).collect();
    // psi = sum_k s_k u_k ⊗ (row k of V^dagger)
    let right = order.iter().map(|&k| vt.row(k).transpose()).collect();
    Ok(SchmidtData { coefficients, left, right })
}

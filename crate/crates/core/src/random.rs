//! Seeded random states used by the golden-state search and by tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMatrix, CVector, DensityOperator, HermitianOperator, PureStateVector};

fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-random pure state (normalized complex Gaussian vector).
pub fn random_pure(dim: usize, rng: &mut impl Rng) -> PureStateVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| c(gaussian(rng), gaussian(rng)));
        if let Ok(psi) = PureStateVector::normalize(v) {
            return psi;
        }
    }
}

/// Hilbert-Schmidt random mixed state `G G^dagger / Tr(G G^dagger)` with a
/// square Ginibre matrix `G`. Full rank with probability one.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = CMatrix::from_fn(dim, dim, |_, _| c(gaussian(rng), gaussian(rng)));
    let op = HermitianOperator::from_matrix_unchecked(&g * g.adjoint());
    let tr = op.trace();
    DensityOperator::new(op.scale(1.0 / tr)).expect("Ginibre state is valid")
}

/// Hermitian matrix with independent Gaussian entries.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianOperator {
    let g = CMatrix::from_fn(dim, dim, |_, _| c(gaussian(rng), gaussian(rng)));
    HermitianOperator::from_matrix_unchecked(g)
}

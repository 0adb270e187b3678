//! Channels as Choi matrices, the free-channel fidelity oracle and free-channel checks.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conic::model::{LinExpr, MatExpr, Model};
use crate::conic::ConicSolver;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, DensityOperator, HermitianOperator, PureStateVector, Subsystem};
use crate::theory::TheoryDescriptor;

/// Tolerance for complete positivity and trace preservation.
pub const CPTP_TOL: f64 = 1e-8;

/// Choi matrix `J = Σ_ij |i><j| ⊗ Λ(|i><j|)`, input factor first.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    j: HermitianOperator,
    dims: (usize, usize),
}

impl ChoiMatrix {
    /// Validates `J ⪰ -1e-8` and `Tr_out J = I_in` within 1e-8.
    pub fn new(j: HermitianOperator, dims: (usize, usize)) -> Result<Self> {
        let out = Self::unchecked(j, dims)?;
        out.check_cptp(CPTP_TOL)?;
        Ok(out)
    }

    fn unchecked(j: HermitianOperator, dims: (usize, usize)) -> Result<Self> {
        if j.dim() != dims.0 * dims.1 {
            return Err(Error::DimensionMismatch { expected: dims.0 * dims.1, found: j.dim() });
        }
        Ok(Self { j, dims })
    }

    fn check_cptp(&self, tol: f64) -> Result<()> {
        let min = self.j.min_eigenvalue();
        if min < -tol {
            return Err(Error::NotPsd(min));
        }
        let marginal = self.j.partial_trace(self.dims, Subsystem::A)?;
        let dev = (&marginal - &HermitianOperator::identity(self.dims.0)).max_abs_entry();
        if dev > tol {
            return Err(Error::InvalidTrace(dev));
        }
        Ok(())
    }

    /// Identity channel on a `d`-dimensional system.
    pub fn identity(d: usize) -> Self {
        let mut m = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + i, j * d + j)] = c(1.0, 0.0);
            }
        }
        Self { j: HermitianOperator::from_matrix_unchecked(m), dims: (d, d) }
    }

    /// Replacement channel `X ↦ Tr(X) δ`.
    pub fn constant(d_in: usize, delta: &DensityOperator) -> Self {
        Self { j: HermitianOperator::identity(d_in).tensor(delta), dims: (d_in, delta.dim()) }
    }

    pub fn matrix(&self) -> &HermitianOperator {
        &self.j
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// Applies the channel to a Hermitian operator (no positivity assumed).
    pub fn apply_op(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        apply_choi_op(&self.j, self.dims, x)
    }
}

/// `Λ(X) = Tr_in[J (X^T ⊗ I)] = Σ_ij X_ij J_(i,j)` with `J_(i,j)` the output block.
fn apply_choi_op(j: &HermitianOperator, dims: (usize, usize), x: &HermitianOperator) -> Result<HermitianOperator> {
    let (din, dout) = dims;
    if x.dim() != din {
        return Err(Error::DimensionMismatch { expected: din, found: x.dim() });
    }
    let jm = j.matrix();
    let mut out = CMatrix::zeros(dout, dout);
    for a in 0..din {
        for b in 0..din {
            let w = x.entry(a, b);
            if w.norm_sqr() == 0.0 {
                continue;
            }
            out += jm.view((a * dout, b * dout), (dout, dout)) * w;
        }
    }
    Ok(HermitianOperator::from_matrix_unchecked((&out + out.adjoint()) * c(0.5, 0.0)))
}

/// `Λ(ρ)` as a state; the output trace must be 1 within 1e-8.
pub fn apply_choi(j: &ChoiMatrix, rho: &DensityOperator) -> Result<DensityOperator> {
    let out = j.apply_op(rho)?;
    if (out.trace() - 1.0).abs() > CPTP_TOL {
        return Err(Error::InvalidTrace(out.trace()));
    }
    DensityOperator::project(&out)
}

/// Choi matrix of `X ↦ <X, W> φ + <X, I - W> δ`, requiring `0 ⪯ W ⪯ I`.
pub fn build_channel(w: &HermitianOperator, phi: &PureStateVector, delta: &DensityOperator) -> Result<ChoiMatrix> {
    if phi.dim() != delta.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: delta.dim() });
    }
    let eig = w.eigenvalues();
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    if lo < -1e-7 || hi > 1.0 + 1e-7 {
        return Err(Error::InvalidParameter(alloc::format!("measurement operator spectrum [{lo}, {hi}] leaves [0, 1]")));
    }
    // Clip the spectrum so that tiny violations do not leak into the CPTP check.
    let w = w.spectral_map(|x| x.clamp(0.0, 1.0));
    let rest = &HermitianOperator::identity(w.dim()) - &w;
    let j = &w.transpose().tensor(&phi.density()) + &rest.transpose().tensor(delta);
    ChoiMatrix::new(j, (w.dim(), phi.dim()))
}

/// Optimal value and Choi matrix of `max <Λ(ρ), φ>` over resource
/// non-generating channels of an affine theory.
pub fn max_fidelity_channel(
    rho: &DensityOperator,
    phi: &PureStateVector,
    t: &TheoryDescriptor,
    solver: &dyn ConicSolver,
) -> Result<(f64, ChoiMatrix)> {
    let basis = t
        .free_affine_basis()
        .ok_or_else(|| Error::UnsupportedTheory(alloc::format!("{} has no finite free-map characterization", t.describe())))?;
    let (din, dout) = (rho.dim(), phi.dim());
    if dout != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), found: dout });
    }
    if din != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), found: din });
    }
    let dims = (din, dout);
    let mut m = Model::new();
    let j = m.herm_psd(din * dout);
    let marginal = j.map(din, |x| x.partial_trace(dims, Subsystem::A).expect("dimensions fixed"));
    m.mat_eq(&marginal, &MatExpr::constant(&HermitianOperator::identity(din)));
    for b in &basis {
        let image = j.map(dout, |x| apply_choi_op(x, dims, b).expect("dimensions fixed"));
        t.constrain_affine_hull(&mut m, &image, &LinExpr::constant(1.0));
    }
    m.maximize(j.inner(&rho.transpose().tensor(&phi.density())));
    let sol = m.solve(solver)?;
    let value = sol.optimal_value()?;
    let jm = sol.eval_mat(&j);
    Ok((value, ChoiMatrix::unchecked(jm, dims)?))
}

/// Outcome of a free-channel check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeChannelCheck {
    pub free: bool,
    /// `true` when only randomly sampled free inputs were tested.
    pub sampled: bool,
}

/// Checks that `J` maps free states to free states. Affine theories are
/// checked exactly on an affine basis of the free set; other theories are
/// spot-checked on `samples` random extreme free states.
pub fn verify_free_channel(
    j: &ChoiMatrix,
    t: &TheoryDescriptor,
    samples: usize,
    solver: &dyn ConicSolver,
) -> Result<FreeChannelCheck> {
    const TOL: f64 = 1e-6;
    if j.dims != (t.dim(), t.dim()) {
        return Err(Error::DimensionMismatch { expected: t.dim() * t.dim(), found: j.j.dim() });
    }
    if let Some(basis) = t.free_affine_basis() {
        let mut free = true;
        for b in &basis {
            let out = j.apply_op(b)?;
            free &= out.min_eigenvalue() >= -TOL && t.in_affine_hull(&out, TOL)?;
        }
        return Ok(FreeChannelCheck { free, sampled: false });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut inputs: Vec<DensityOperator> = Vec::with_capacity(samples + 1);
    inputs.push(DensityOperator::maximally_mixed(t.dim()));
    for _ in 0..samples {
        inputs.push(t.sample_free_state(&mut rng, solver)?);
    }
    let mut free = true;
    for sigma in &inputs {
        free &= t.contains(&j.apply_op(sigma)?, TOL, solver)?;
    }
    Ok(FreeChannelCheck { free, sampled: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::conic::InteriorPoint;
    use crate::linalg::BlockStructure;
    use crate::random::{random_density, random_pure};

    fn solver() -> InteriorPoint {
        InteriorPoint::default()
    }

    fn rho_p(p: f64) -> DensityOperator {
        DensityOperator::mixture(p, &PureStateVector::uniform(2).density(), &DensityOperator::maximally_mixed(2)).unwrap()
    }

    #[test]
    fn identity_and_constant_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let rho = random_density(3, &mut rng);
        let id = ChoiMatrix::identity(3);
        assert!(ChoiMatrix::new(id.matrix().clone(), (3, 3)).is_ok());
        assert!((&*apply_choi(&id, &rho).unwrap() - &*rho).max_abs_entry() < 1e-12);
        let delta = random_density(2, &mut rng);
        let k = ChoiMatrix::constant(3, &delta);
        assert!((&*apply_choi(&k, &rho).unwrap() - &*delta).max_abs_entry() < 1e-12);
    }

    #[test]
    fn measure_and_prepare_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let phi = random_pure(3, &mut rng);
            let delta = random_density(3, &mut rng);
            let w = random_density(3, &mut rng).into_op();
            let ch = build_channel(&w, &phi, &delta).unwrap();
            let rho = random_density(3, &mut rng);
            let p = rho.inner(&w);
            let want = &phi.density().scale(p) + &delta.scale(1.0 - p);
            assert!((&*apply_choi(&ch, &rho).unwrap() - &want).max_abs_entry() < 1e-10);
        }
        let phi = PureStateVector::uniform(2);
        let delta = DensityOperator::basis_state(2, 0);
        let all = build_channel(&HermitianOperator::identity(2), &phi, &delta).unwrap();
        let none = build_channel(&HermitianOperator::zeros(2), &phi, &delta).unwrap();
        let rho = rho_p(0.3);
        assert!((&*apply_choi(&all, &rho).unwrap() - &*phi.density()).max_abs_entry() < 1e-12);
        assert!((&*apply_choi(&none, &rho).unwrap() - &*delta).max_abs_entry() < 1e-12);
        assert!(build_channel(&HermitianOperator::identity(2).scale(1.5), &phi, &delta).is_err());
    }

    #[test]
    fn rejects_non_trace_preserving() {
        let j = HermitianOperator::identity(4);
        assert!(matches!(ChoiMatrix::new(j, (2, 2)), Err(Error::InvalidTrace(_))));
    }

    #[test]
    fn oracle_examples() {
        let coh = TheoryDescriptor::coherence(2).unwrap();
        let plus = PureStateVector::uniform(2);
        let (v, j) = max_fidelity_channel(&plus.density(), &plus, &coh, &solver()).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
        assert!(verify_free_channel(&j, &coh, 0, &solver()).unwrap().free);
        for p in [0.0, 0.5, 0.9] {
            let (v, _) = max_fidelity_channel(&rho_p(p), &plus, &coh, &solver()).unwrap();
            assert!((v - (1.0 + p) / 2.0).abs() < 1e-6, "p = {p}: {v}");
        }
        let tau = DensityOperator::new(HermitianOperator::from_real_diagonal(&[2.0 / 3.0, 1.0 / 3.0])).unwrap();
        let th = TheoryDescriptor::thermal(tau.clone()).unwrap();
        let (v, _) = max_fidelity_channel(&tau, &PureStateVector::basis(2, 1), &th, &solver()).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-6);
        let ppt = TheoryDescriptor::ppt(2, 2).unwrap();
        assert!(matches!(
            max_fidelity_channel(&DensityOperator::maximally_mixed(4), &PureStateVector::maximally_entangled(2, 2), &ppt, &solver()),
            Err(Error::UnsupportedTheory(_))
        ));
    }

    #[test]
    fn oracle_channels_are_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let asym = TheoryDescriptor::asymmetry(BlockStructure::new(3, vec![vec![0, 1], vec![2]]).unwrap()).unwrap();
        for t in [TheoryDescriptor::coherence(3).unwrap(), asym] {
            let rho = random_density(3, &mut rng);
            let phi = random_pure(3, &mut rng);
            let (v, j) = max_fidelity_channel(&rho, &phi, &t, &solver()).unwrap();
            assert!(v <= 1.0 + 1e-7);
            let j = ChoiMatrix::new(j.matrix().spectral_map(|x| x.max(0.0)), j.dims()).unwrap();
            assert!(verify_free_channel(&j, &t, 0, &solver()).unwrap().free);
            let got = apply_choi(&j, &rho).unwrap().inner(&phi.density());
            assert!((got - v).abs() < 1e-6);
        }
    }

    #[test]
    fn verify_free_channel_examples() {
        let coh = TheoryDescriptor::coherence(2).unwrap();
        assert!(verify_free_channel(&ChoiMatrix::identity(2), &coh, 0, &solver()).unwrap().free);
        let to_plus = ChoiMatrix::constant(2, &PureStateVector::uniform(2).density());
        assert!(!verify_free_channel(&to_plus, &coh, 0, &solver()).unwrap().free);
        let ppt = TheoryDescriptor::ppt(2, 2).unwrap();
        let check = verify_free_channel(&ChoiMatrix::identity(4), &ppt, 3, &solver()).unwrap();
        assert!(check.free && check.sampled);
        let to_bell = ChoiMatrix::constant(4, &PureStateVector::maximally_entangled(2, 2).density());
        assert!(!verify_free_channel(&to_bell, &ppt, 3, &solver()).unwrap().free);
    }
}

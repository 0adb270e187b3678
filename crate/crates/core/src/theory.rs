//! Resource theories as bundles of conic constraint generators.
//!
//! A [`TheoryDescriptor`] knows how to emit, inside a [`Model`], the
//! constraints for: an element of cone(F), membership in F, the scaled polar
//! `{X : <X, σ> <= s for all σ in F}`, the scaled affine polar (equality
//! instead of inequality), and the scaled affine hull `λ aff(F)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::conic::model::{LinExpr, MatExpr, Model};
use crate::conic::{ConicSolver, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{c, BlockStructure, CVector, DensityOperator, HermitianOperator, PureStateVector};
use crate::random::random_hermitian;

/// `(|00> + cos θ |01> + sin θ |10> + |11>) / sqrt(3)`, the two-qubit U(1)
/// asymmetry golden family for the Hamiltonian `diag(0, 1, 1, 2)`.
pub fn asymmetry_golden_state(theta: f64) -> PureStateVector {
    let s = 1.0 / 3f64.sqrt();
    PureStateVector::from_real(&[s, s * theta.cos(), s * theta.sin(), s]).expect("unit norm")
}

#[derive(Debug, Clone, PartialEq)]
pub enum TheoryKind {
    /// Free states are diagonal in the computational basis.
    Coherence,
    /// The single free state is the Gibbs state.
    Thermal { gibbs: DensityOperator },
    /// Free states commute with a Hamiltonian whose eigenspaces are the blocks.
    Asymmetry { blocks: BlockStructure, golden_theta: f64 },
    /// States with positive partial transpose on the second factor.
    Ppt { dims: (usize, usize) },
    /// Convex hull of the PPT sets across every bipartition of a multipartite
    /// system (a relaxation of the biseparable states).
    PptMixture { local_dims: Vec<usize> },
}

/// A convex resource theory on a `dim`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryDescriptor {
    dim: usize,
    kind: TheoryKind,
}

/// Every bipartition `S | S^c` of `n` parties as a mask of the parties in `S`,
/// one representative per unordered cut (the last party is never in `S`).
pub fn bipartitions(n: usize) -> Vec<Vec<bool>> {
    (1..(1usize << (n - 1)))
        .map(|mask| (0..n).map(|k| k < n - 1 && mask & (1 << k) != 0).collect())
        .collect()
}

impl TheoryDescriptor {
    pub fn coherence(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter("coherence needs dimension at least 2".into()));
        }
        Ok(Self { dim: d, kind: TheoryKind::Coherence })
    }

    /// Fails for a singular Gibbs state (the generalized robustness would be unbounded).
    pub fn thermal(gibbs: DensityOperator) -> Result<Self> {
        let min = gibbs.min_eigenvalue();
        if min <= 1e-12 {
            return Err(Error::InvalidParameter(alloc::format!("Gibbs state must be full rank (min eigenvalue {min:.3e})")));
        }
        Ok(Self { dim: gibbs.dim(), kind: TheoryKind::Thermal { gibbs } })
    }

    pub fn asymmetry(blocks: BlockStructure) -> Result<Self> {
        if blocks.dim() < 1 {
            return Err(Error::InvalidBlocks("empty space".into()));
        }
        Ok(Self { dim: blocks.dim(), kind: TheoryKind::Asymmetry { blocks, golden_theta: core::f64::consts::FRAC_PI_4 } })
    }

    /// Sets the angle of the analytic golden state for the two-qubit
    /// `{0}, {1, 2}, {3}` asymmetry instance. No effect on other theories.
    pub fn with_golden_angle(mut self, theta: f64) -> Self {
        if let TheoryKind::Asymmetry { golden_theta, .. } = &mut self.kind {
            *golden_theta = theta;
        }
        self
    }

    pub fn ppt(da: usize, db: usize) -> Result<Self> {
        if da < 2 || db < 2 {
            return Err(Error::InvalidParameter("PPT theory needs local dimensions at least 2".into()));
        }
        Ok(Self { dim: da * db, kind: TheoryKind::Ppt { dims: (da, db) } })
    }

    pub fn ppt_mixture(local_dims: Vec<usize>) -> Result<Self> {
        if local_dims.len() < 2 || local_dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidParameter("need at least two parties of dimension at least 2".into()));
        }
        let dim = local_dims.iter().product();
        Ok(Self { dim, kind: TheoryKind::PptMixture { local_dims } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &TheoryKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            TheoryKind::Coherence => "coherence",
            TheoryKind::Thermal { .. } => "thermal",
            TheoryKind::Asymmetry { .. } => "asymmetry",
            TheoryKind::Ppt { .. } => "ppt",
            TheoryKind::PptMixture { .. } => "ppt-mixture",
        }
    }

    /// Affine theories satisfy `F = aff(F) ∩ D`.
    pub fn is_affine(&self) -> bool {
        matches!(self.kind, TheoryKind::Coherence | TheoryKind::Thermal { .. } | TheoryKind::Asymmetry { .. })
    }

    /// Whether span(F) is the whole Hermitian space.
    pub fn is_full_dimensional(&self) -> bool {
        match &self.kind {
            TheoryKind::Ppt { .. } | TheoryKind::PptMixture { .. } => true,
            TheoryKind::Asymmetry { blocks, .. } => blocks.blocks().len() == 1,
            TheoryKind::Coherence | TheoryKind::Thermal { .. } => false,
        }
    }

    fn cuts(local_dims: &[usize]) -> Vec<Vec<bool>> {
        bipartitions(local_dims.len())
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: d });
        }
        Ok(())
    }

    /// Adds variables for a generic element of cone(F) and returns it.
    pub fn cone_element(&self, m: &mut Model) -> MatExpr {
        let d = self.dim;
        match &self.kind {
            TheoryKind::Coherence => {
                let diag = m.nonneg_vec(d);
                MatExpr::from_entries(d, |i, j| if i == j { (diag[i].clone(), LinExpr::zero()) } else { (LinExpr::zero(), LinExpr::zero()) })
            }
            TheoryKind::Thermal { gibbs } => {
                let s = m.nonneg();
                MatExpr::scaled_constant(gibbs, &s)
            }
            TheoryKind::Asymmetry { blocks, .. } => {
                let mut out = MatExpr::zeros(d);
                for block in blocks.blocks() {
                    let sub = m.herm_psd(block.len());
                    out = out.add(&embed_block(&sub, block, d));
                }
                out
            }
            TheoryKind::Ppt { dims } => {
                let sigma = m.herm_psd(d);
                let dims = *dims;
                let pt = sigma.map(d, |x| x.partial_transpose(dims).expect("dimension checked"));
                m.psd(&pt);
                sigma
            }
            TheoryKind::PptMixture { local_dims } => {
                let mut out = MatExpr::zeros(d);
                for cut in Self::cuts(local_dims) {
                    let sigma = m.herm_psd(d);
                    let pt = sigma.map(d, |x| x.partial_transpose_parties(local_dims, &cut).expect("dimension checked"));
                    m.psd(&pt);
                    out = out.add(&sigma);
                }
                out
            }
        }
    }

    /// Adds variables for a free state and returns it.
    pub fn free_state(&self, m: &mut Model) -> MatExpr {
        let sigma = self.cone_element(m);
        m.eq(&sigma.trace(), &LinExpr::constant(1.0));
        sigma
    }

    /// Constrains `<X, σ> <= s` for every free state `σ`.
    pub fn constrain_polar(&self, m: &mut Model, x: &MatExpr, s: &LinExpr) {
        let d = self.dim;
        match &self.kind {
            TheoryKind::Coherence => {
                for i in 0..d {
                    m.geq(s, x.diag(i));
                }
            }
            TheoryKind::Thermal { gibbs } => m.geq(s, &x.inner(gibbs)),
            TheoryKind::Asymmetry { blocks, .. } => {
                for block in blocks.blocks() {
                    let sub = x.submatrix(block);
                    let id = MatExpr::scaled_constant(&HermitianOperator::identity(block.len()), s);
                    m.psd(&id.sub(&sub));
                }
            }
            TheoryKind::Ppt { dims } => {
                let dims = *dims;
                let y = m.herm_psd(d);
                let ypt = y.map(d, |v| v.partial_transpose(dims).expect("dimension checked"));
                let id = MatExpr::scaled_constant(&HermitianOperator::identity(d), s);
                m.psd(&id.sub(x).sub(&ypt));
            }
            TheoryKind::PptMixture { local_dims } => {
                for cut in Self::cuts(local_dims) {
                    let y = m.herm_psd(d);
                    let ypt = y.map(d, |v| v.partial_transpose_parties(local_dims, &cut).expect("dimension checked"));
                    let id = MatExpr::scaled_constant(&HermitianOperator::identity(d), s);
                    m.psd(&id.sub(x).sub(&ypt));
                }
            }
        }
    }

    /// Constrains `<X, σ> = s` for every free state `σ`.
    pub fn constrain_affine_polar(&self, m: &mut Model, x: &MatExpr, s: &LinExpr) {
        let d = self.dim;
        match &self.kind {
            TheoryKind::Coherence => {
                for i in 0..d {
                    m.eq(x.diag(i), s);
                }
            }
            TheoryKind::Thermal { gibbs } => m.eq(&x.inner(gibbs), s),
            TheoryKind::Asymmetry { blocks, .. } => {
                for block in blocks.blocks() {
                    let sub = x.submatrix(block);
                    m.mat_eq(&sub, &MatExpr::scaled_constant(&HermitianOperator::identity(block.len()), s));
                }
            }
            TheoryKind::Ppt { .. } | TheoryKind::PptMixture { .. } => {
                m.mat_eq(x, &MatExpr::scaled_constant(&HermitianOperator::identity(d), s));
            }
        }
    }

    /// Constrains `X ∈ λ aff(F)`.
    pub fn constrain_affine_hull(&self, m: &mut Model, x: &MatExpr, lambda: &LinExpr) {
        match &self.kind {
            TheoryKind::Coherence => {
                let blocks = BlockStructure::new(self.dim, (0..self.dim).map(|i| vec![i]).collect()).expect("singleton blocks");
                zero_off_block(m, x, &blocks);
                m.eq(&x.trace(), lambda);
            }
            TheoryKind::Thermal { gibbs } => m.mat_eq(x, &MatExpr::scaled_constant(gibbs, lambda)),
            TheoryKind::Asymmetry { blocks, .. } => {
                zero_off_block(m, x, blocks);
                m.eq(&x.trace(), lambda);
            }
            TheoryKind::Ppt { .. } | TheoryKind::PptMixture { .. } => m.eq(&x.trace(), lambda),
        }
    }

    /// Linearly independent operators spanning span(F).
    pub fn span_basis(&self) -> Vec<HermitianOperator> {
        let d = self.dim;
        match &self.kind {
            TheoryKind::Coherence => (0..d).map(|i| HermitianOperator::basis_projector(d, i)).collect(),
            TheoryKind::Thermal { gibbs } => vec![gibbs.op().clone()],
            TheoryKind::Asymmetry { blocks, .. } => intra_block_states(blocks).into_iter().map(DensityOperator::into_op).collect(),
            TheoryKind::Ppt { .. } | TheoryKind::PptMixture { .. } => HermitianOperator::real_basis(d),
        }
    }

    /// Free states forming an affine basis of aff(F); `None` for non-affine theories.
    pub fn free_affine_basis(&self) -> Option<Vec<DensityOperator>> {
        let d = self.dim;
        match &self.kind {
            TheoryKind::Coherence => Some((0..d).map(|i| DensityOperator::basis_state(d, i)).collect()),
            TheoryKind::Thermal { gibbs } => Some(vec![gibbs.clone()]),
            TheoryKind::Asymmetry { blocks, .. } => Some(intra_block_states(blocks)),
            TheoryKind::Ppt { .. } | TheoryKind::PptMixture { .. } => None,
        }
    }

    /// Closed-form golden state where one is known.
    pub fn golden_analytic(&self) -> Option<PureStateVector> {
        match &self.kind {
            TheoryKind::Coherence => Some(PureStateVector::uniform(self.dim)),
            TheoryKind::Thermal { gibbs } => {
                let eig = gibbs.eigh();
                PureStateVector::normalize(eig.vectors.column(0).into_owned()).ok().map(|p| p.with_canonical_phase())
            }
            TheoryKind::Asymmetry { blocks, golden_theta } => {
                let two_qubit = BlockStructure::new(4, vec![vec![0], vec![1, 2], vec![3]]).expect("valid partition");
                (*blocks == two_qubit).then(|| asymmetry_golden_state(*golden_theta))
            }
            TheoryKind::Ppt { dims } => Some(PureStateVector::maximally_entangled(dims.0, dims.1)),
            TheoryKind::PptMixture { local_dims } => {
                let d0 = local_dims[0];
                local_dims.iter().all(|&d| d == d0).then(|| PureStateVector::ghz(d0, local_dims.len()))
            }
        }
    }

    /// Norm of the component of `op` orthogonal to span(F).
    pub fn span_residual(&self, op: &HermitianOperator) -> Result<f64> {
        self.check_dim(op.dim())?;
        if self.is_full_dimensional() {
            return Ok(0.0);
        }
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for b in self.span_basis() {
            let mut v = b.to_coords();
            for _ in 0..2 {
                for q in &basis {
                    let p: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(q).for_each(|(x, qi)| *x -= p * qi);
                }
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                basis.push(v.into_iter().map(|x| x / n).collect());
            }
        }
        let mut r = op.to_coords();
        for _ in 0..2 {
            for q in &basis {
                let p: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(q).for_each(|(x, qi)| *x -= p * qi);
            }
        }
        Ok(r.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    /// Whether `op` lies in aff(F) (span(F) with unit trace) within `tol`.
    pub fn in_affine_hull(&self, op: &HermitianOperator, tol: f64) -> Result<bool> {
        Ok(self.span_residual(op)? <= tol && (op.trace() - 1.0).abs() <= tol)
    }

    /// Smallest `t >= 0` such that `(ρ + t I/d) / (1 + t)` is free, or `None`
    /// when no amount of white noise makes `ρ` free.
    pub fn white_noise_robustness(&self, rho: &HermitianOperator, solver: &dyn ConicSolver) -> Result<Option<f64>> {
        self.check_dim(rho.dim())?;
        let d = self.dim;
        let mut m = Model::new();
        let t = m.nonneg();
        let sigma = self.cone_element(&mut m);
        let noise = MatExpr::scaled_constant(&HermitianOperator::identity(d).scale(1.0 / d as f64), &t);
        m.mat_eq(&MatExpr::constant(rho).add(&noise), &sigma);
        m.minimize(t.clone());
        let sol = m.solve(solver)?;
        match sol.status() {
            SolveStatus::Infeasible => Ok(None),
            _ => Ok(Some(sol.optimal_value()?.max(0.0))),
        }
    }

    /// Membership in F up to `tol`. Exact spectral tests are used where F has
    /// a closed-form description; mixtures of PPT states use
    /// [`Self::white_noise_robustness`].
    pub fn contains(&self, rho: &HermitianOperator, tol: f64, solver: &dyn ConicSolver) -> Result<bool> {
        self.check_dim(rho.dim())?;
        if (rho.trace() - 1.0).abs() > tol || rho.min_eigenvalue() < -tol {
            return Ok(false);
        }
        match &self.kind {
            TheoryKind::Coherence | TheoryKind::Thermal { .. } | TheoryKind::Asymmetry { .. } => Ok(self.span_residual(rho)? <= tol),
            TheoryKind::Ppt { dims } => Ok(rho.partial_transpose(*dims)?.min_eigenvalue() >= -tol),
            TheoryKind::PptMixture { .. } => Ok(self.white_noise_robustness(rho, solver)?.is_some_and(|t| t <= tol)),
        }
    }

    /// A free state maximizing a random linear functional (an extreme point of F).
    pub fn sample_free_state(&self, rng: &mut impl Rng, solver: &dyn ConicSolver) -> Result<DensityOperator> {
        let h = random_hermitian(self.dim, rng);
        let mut m = Model::new();
        let sigma = self.free_state(&mut m);
        m.maximize(sigma.inner(&h));
        let sol = m.solve(solver)?;
        sol.optimal_value()?;
        DensityOperator::project(&sol.eval_mat(&sigma))
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match &self.kind {
            TheoryKind::Coherence => alloc::format!("coherence(d={})", self.dim),
            TheoryKind::Thermal { .. } => alloc::format!("thermal(d={})", self.dim),
            TheoryKind::Asymmetry { blocks, .. } => alloc::format!("asymmetry(blocks={:?})", blocks.blocks()),
            TheoryKind::Ppt { dims } => alloc::format!("ppt({}x{})", dims.0, dims.1),
            TheoryKind::PptMixture { local_dims } => alloc::format!("ppt-mixture({local_dims:?})"),
        }
    }
}

/// Places a `|block| x |block|` expression into a `d x d` zero matrix.
fn embed_block(sub: &MatExpr, block: &[usize], d: usize) -> MatExpr {
    let pos = |i: usize| block.iter().position(|&b| b == i);
    MatExpr::from_entries(d, |i, j| match (pos(i), pos(j)) {
        (Some(a), Some(b)) if a == b => (sub.diag(a).clone(), LinExpr::zero()),
        (Some(a), Some(b)) => {
            let h = core::f64::consts::FRAC_1_SQRT_2;
            let (re, im) = sub.offdiag(a.min(b), a.max(b));
            (re.scale(h), im.scale(h))
        }
        _ => (LinExpr::zero(), LinExpr::zero()),
    })
}

/// Zeroes every coordinate of `x` that couples two different blocks.
fn zero_off_block(m: &mut Model, x: &MatExpr, blocks: &BlockStructure) {
    let owner = blocks.owners();
    let d = blocks.dim();
    for i in 0..d {
        for j in (i + 1)..d {
            if owner[i] != owner[j] {
                let (re, im) = x.offdiag(i, j);
                m.eq(re, &LinExpr::zero());
                m.eq(im, &LinExpr::zero());
            }
        }
    }
}

/// Basis states and pairwise superpositions `(|j> + |k>)/sqrt 2`, `(|j> + i|k>)/sqrt 2`
/// inside each block.
fn intra_block_states(blocks: &BlockStructure) -> Vec<DensityOperator> {
    let d = blocks.dim();
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for block in blocks.blocks() {
        for &j in block {
            out.push(DensityOperator::basis_state(d, j));
        }
        for (a, &j) in block.iter().enumerate() {
            for &k in &block[a + 1..] {
                for phase in [c(1.0, 0.0), c(0.0, 1.0)] {
                    let mut v = CVector::zeros(d);
                    v[j] = c(h, 0.0);
                    v[k] = phase * h;
                    out.push(PureStateVector::normalize(v).expect("nonzero").density());
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::InteriorPoint;
    use crate::random::{random_density, random_pure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn solver() -> InteriorPoint {
        InteriorPoint::default()
    }

    fn asym2q() -> TheoryDescriptor {
        TheoryDescriptor::asymmetry(BlockStructure::new(4, vec![vec![0], vec![1, 2], vec![3]]).unwrap()).unwrap()
    }

    fn thermal(diag: &[f64]) -> TheoryDescriptor {
        TheoryDescriptor::thermal(DensityOperator::new(HermitianOperator::from_real_diagonal(diag)).unwrap()).unwrap()
    }

    fn polar_accepts(t: &TheoryDescriptor, w: &HermitianOperator, s: f64) -> bool {
        let mut m = Model::new();
        let x = MatExpr::constant(w);
        t.constrain_polar(&mut m, &x, &LinExpr::constant(s));
        // A feasibility problem needs at least one block.
        let _ = m.free_scalar();
        m.solve(&solver()).unwrap().is_optimal()
    }

    fn max_free_overlap(t: &TheoryDescriptor, op: &HermitianOperator) -> f64 {
        let mut m = Model::new();
        let sigma = t.free_state(&mut m);
        m.maximize(sigma.inner(op));
        m.solve(&solver()).unwrap().optimal_value().unwrap()
    }

    fn all_theories() -> Vec<TheoryDescriptor> {
        vec![
            TheoryDescriptor::coherence(3).unwrap(),
            thermal(&[0.5, 0.3, 0.2]),
            asym2q(),
            TheoryDescriptor::ppt(2, 2).unwrap(),
        ]
    }

    #[test]
    fn constructor_preconditions() {
        assert!(TheoryDescriptor::coherence(1).is_err());
        assert!(TheoryDescriptor::ppt(1, 2).is_err());
        let singular = DensityOperator::basis_state(2, 0);
        assert!(TheoryDescriptor::thermal(singular).is_err());
    }

    #[test]
    fn coherence_examples() {
        let t = TheoryDescriptor::coherence(2).unwrap();
        let w = HermitianOperator::from_real_rows(2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(polar_accepts(&t, &w, 1.0));
        assert!(!polar_accepts(&t, &w.scale(1.01), 1.0));
        assert!(t.contains(&DensityOperator::maximally_mixed(2), 1e-7, &solver()).unwrap());
        assert!(!t.contains(&PureStateVector::uniform(2).density(), 1e-7, &solver()).unwrap());
        let g = TheoryDescriptor::coherence(3).unwrap().golden_analytic().unwrap();
        let s = 1.0 / 3f64.sqrt();
        for z in g.amplitudes().iter() {
            assert!((z.re - s).abs() < 1e-15 && z.im == 0.0);
        }
    }

    #[test]
    fn coherence_golden_matches_grid_oracle() {
        // Oracle: for real nonnegative amplitudes the dual value is (sum |c_i|)^2;
        // grid over the positive octant of the sphere.
        let steps = 120;
        let mut best = (0.0, [0.0; 3]);
        for i in 0..=steps {
            for j in 0..=steps {
                let a = i as f64 / steps as f64 * core::f64::consts::FRAC_PI_2;
                let b = j as f64 / steps as f64 * core::f64::consts::FRAC_PI_2;
                let v = [a.sin() * b.cos(), a.sin() * b.sin(), a.cos()];
                let val = (v[0] + v[1] + v[2]).powi(2);
                if val > best.0 {
                    best = (val, v);
                }
            }
        }
        assert!((best.0 - 3.0).abs() < 1e-3);
        let s = 1.0 / 3f64.sqrt();
        assert!(best.1.iter().all(|x| (x - s).abs() < 0.03));
    }

    #[test]
    fn thermal_examples() {
        let t = thermal(&[2.0 / 3.0, 1.0 / 3.0]);
        let g = t.golden_analytic().unwrap();
        assert!((g.amplitudes()[1].re.abs() - 1.0).abs() < 1e-12);
        let tau = DensityOperator::new(HermitianOperator::from_real_diagonal(&[2.0 / 3.0, 1.0 / 3.0])).unwrap();
        assert!(t.contains(&tau, 1e-7, &solver()).unwrap());
        assert!(!t.contains(&DensityOperator::maximally_mixed(2), 1e-7, &solver()).unwrap());
    }

    #[test]
    fn asymmetry_examples() {
        let t = asym2q();
        for theta in [0.0, core::f64::consts::PI / 7.0, core::f64::consts::FRAC_PI_4] {
            let g = asymmetry_golden_state(theta).density();
            assert!((max_free_overlap(&t, &g) - 1.0 / 3.0).abs() < 1e-7);
        }
        let pp = PureStateVector::uniform(4).density();
        assert!((max_free_overlap(&t, &pp) - 0.5).abs() < 1e-7);
        assert!(t.contains(&DensityOperator::basis_state(4, 1), 1e-7, &solver()).unwrap());
        let mixed = PureStateVector::from_real(&[0.0, 0.6, 0.8, 0.0]).unwrap().density();
        assert!(t.contains(&mixed, 1e-7, &solver()).unwrap());
        assert_eq!(t.free_affine_basis().unwrap().len(), 6);
    }

    #[test]
    fn ppt_examples() {
        let t = TheoryDescriptor::ppt(2, 2).unwrap();
        let bell = PureStateVector::maximally_entangled(2, 2).density();
        assert!(polar_accepts(&t, &bell.scale(2.0), 1.0));
        assert!(!polar_accepts(&t, &bell.scale(2.05), 1.0));
        assert!(t.contains(&DensityOperator::basis_state(4, 1), 1e-7, &solver()).unwrap());
        assert!(!t.contains(&bell, 1e-7, &solver()).unwrap());
        assert!((max_free_overlap(&t, &bell) - 0.5).abs() < 1e-7);
    }

    #[test]
    fn identity_in_every_polar() {
        for t in all_theories() {
            assert!(polar_accepts(&t, &HermitianOperator::identity(t.dim()), 1.0), "{}", t.describe());
        }
    }

    #[test]
    fn free_affine_basis_states_are_free_and_span_is_independent() {
        for t in all_theories() {
            if let Some(basis) = t.free_affine_basis() {
                for b in &basis {
                    assert!(t.contains(b, 1e-7, &solver()).unwrap(), "{}", t.describe());
                }
            }
            let span = t.span_basis();
            let coords: Vec<Vec<f64>> = span.iter().map(HermitianOperator::to_coords).collect();
            let mat = nalgebra::DMatrix::from_fn(coords.len(), coords[0].len(), |i, j| coords[i][j]);
            assert_eq!(mat.rank(1e-10), span.len());
        }
    }

    #[test]
    fn polar_consistency_on_sampled_free_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for t in all_theories() {
            let d = t.dim();
            let free: Vec<DensityOperator> = (0..50).map(|_| t.sample_free_state(&mut rng, &solver()).unwrap()).collect();
            for _ in 0..50 {
                // A random element of the polar: maximize <W, ρ> over W ⪰ 0 in F°.
                let rho = random_density(d, &mut rng);
                let mut m = Model::new();
                let w = m.herm_psd(d);
                t.constrain_polar(&mut m, &w, &LinExpr::constant(1.0));
                m.maximize(w.inner(&rho));
                let sol = m.solve(&solver()).unwrap();
                let w = sol.eval_mat(&w);
                for s in &free {
                    assert!(w.inner(s) <= 1.0 + 1e-7, "{}: {}", t.describe(), w.inner(s));
                }
                if t.is_affine() {
                    let mut m = Model::new();
                    let wa = m.herm_psd(d);
                    t.constrain_affine_polar(&mut m, &wa, &LinExpr::constant(1.0));
                    m.maximize(wa.inner(&rho));
                    let wa = m.solve(&solver()).unwrap().eval_mat(&wa);
                    for s in &free {
                        assert!((wa.inner(s) - 1.0).abs() <= 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn affine_polar_equals_polar_of_affine_hull() {
        // W ∈ F^♭ iff <W, X> <= 1 for all X ∈ aff(F). The latter is checked
        // directly: maximize <W, X> over X ∈ aff(F) must be bounded by 1.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for t in [TheoryDescriptor::coherence(3).unwrap(), asym2q()] {
            let d = t.dim();
            for _ in 0..10 {
                let rho = random_pure(d, &mut rng).density();
                let mut m = Model::new();
                let w = m.herm_psd(d);
                t.constrain_affine_polar(&mut m, &w, &LinExpr::constant(1.0));
                m.maximize(w.inner(&rho));
                let w = m.solve(&solver()).unwrap().eval_mat(&w);
                let mut m = Model::new();
                let x = m.herm_free(d);
                t.constrain_affine_hull(&mut m, &x, &LinExpr::constant(1.0));
                m.maximize(x.inner(&w));
                let sol = m.solve(&solver()).unwrap();
                assert!(sol.is_optimal());
                assert!(sol.value() <= 1.0 + 1e-6);

                // A polar element of F that is not affine-polar admits unbounded
                // growth over aff(F).
                let mut m = Model::new();
                let x = m.herm_free(d);
                t.constrain_affine_hull(&mut m, &x, &LinExpr::constant(1.0));
                let probe = HermitianOperator::basis_projector(d, 0);
                m.maximize(x.inner(&probe));
                assert_eq!(m.solve(&solver()).unwrap().status(), crate::conic::SolveStatus::Unbounded);
            }
        }
    }

    #[test]
    fn full_dimensional_affine_polar_is_identity() {
        let t = TheoryDescriptor::ppt(2, 2).unwrap();
        let mut m = Model::new();
        let w = m.herm_free(4);
        t.constrain_affine_polar(&mut m, &w, &LinExpr::constant(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        m.maximize(w.inner(&random_hermitian(4, &mut rng)));
        let sol = m.solve(&solver()).unwrap();
        assert!((&sol.eval_mat(&w) - &HermitianOperator::identity(4)).max_abs_entry() < 1e-7);
    }

    #[test]
    fn hamiltonian_blocks_helper() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 1.0, 2.0]);
        let t = TheoryDescriptor::asymmetry(BlockStructure::from_diagonal_hamiltonian(&h, 1e-9).unwrap()).unwrap();
        assert_eq!(t, asym2q());
    }
}

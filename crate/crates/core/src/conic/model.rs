//! Modeling layer: affine expressions over solver variables, complex
//! Hermitian matrix variables (via the real symmetric embedding) and
//! constraint helpers that lower to a [`ConicProblem`].
//!
//! A [`MatExpr`] holds one affine expression per coordinate of a Hermitian
//! matrix in the orthonormal basis used by [`HermitianOperator::to_coords`].

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::{svec_index, Cone, ConicProblem, ConicSolution, ConicSolver, Equality, Sense, SolveStatus};
use crate::error::Result;
use crate::linalg::HermitianOperator;

const COEFF_EPS: f64 = 1e-15;

/// Affine expression `sum_i a_i x_i + constant` over solver variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(i: usize) -> Self {
        Self { terms: vec![(i, 1.0)], constant: 0.0 }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self { terms, constant: self.constant + other.constant }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { terms: self.terms.iter().map(|&(i, v)| (i, a * v)).collect(), constant: a * self.constant }
    }

    pub fn plus(&self, c: f64) -> Self {
        Self { terms: self.terms.clone(), constant: self.constant + c }
    }

    /// `self += a * other` without reallocating `self`.
    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        self.terms.extend(other.terms.iter().map(|&(i, v)| (i, a * v)));
        self.constant += a * other.constant;
    }

    /// Sorts, merges duplicate variables and drops zero coefficients.
    pub fn compact(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (i, v) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|t| t.1.abs() > COEFF_EPS);
        Self { terms: out, constant: self.constant }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.1 == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, v)| v * x[i]).sum::<f64>()
    }
}

/// Hermitian-matrix-valued affine expression, one [`LinExpr`] per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct MatExpr {
    dim: usize,
    coords: Vec<LinExpr>,
}

/// Coordinate positions of the real and imaginary parts of entry `(i, j)`, `i < j`.
fn offdiag_coords(dim: usize, i: usize, j: usize) -> (usize, usize) {
    debug_assert!(i < j);
    // Pairs (i, j) with i < j are enumerated row by row after the diagonal.
    let before = i * dim - i * (i + 1) / 2 + (j - i - 1);
    (dim + 2 * before, dim + 2 * before + 1)
}

impl MatExpr {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, coords: vec![LinExpr::zero(); dim * dim] }
    }

    pub fn constant(op: &HermitianOperator) -> Self {
        Self { dim: op.dim(), coords: op.to_coords().into_iter().map(LinExpr::constant).collect() }
    }

    /// `s * op` for a constant operator and a scalar expression.
    pub fn scaled_constant(op: &HermitianOperator, s: &LinExpr) -> Self {
        Self { dim: op.dim(), coords: op.to_coords().into_iter().map(|v| s.scale(v)).collect() }
    }

    /// Builds the matrix from expressions for `Re a_ij` and `Im a_ij` on and above the diagonal.
    pub fn from_entries(dim: usize, entry: impl Fn(usize, usize) -> (LinExpr, LinExpr)) -> Self {
        let s2 = core::f64::consts::SQRT_2;
        let mut coords = vec![LinExpr::zero(); dim * dim];
        for i in 0..dim {
            coords[i] = entry(i, i).0;
            for j in (i + 1)..dim {
                let (re, im) = entry(i, j);
                let (ri, ii) = offdiag_coords(dim, i, j);
                coords[ri] = re.scale(s2);
                coords[ii] = im.scale(s2);
            }
        }
        Self { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[LinExpr] {
        &self.coords
    }

    /// Diagonal entry `(i, i)`.
    pub fn diag(&self, i: usize) -> &LinExpr {
        &self.coords[i]
    }

    /// Coordinates (real part, imaginary part) of entry `(i, j)` for `i < j`, scaled by `sqrt(2)`.
    pub fn offdiag(&self, i: usize, j: usize) -> (&LinExpr, &LinExpr) {
        let (r, m) = offdiag_coords(self.dim, i, j);
        (&self.coords[r], &self.coords[m])
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix expression dimension mismatch");
        Self { dim: self.dim, coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix expression dimension mismatch");
        Self { dim: self.dim, coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { dim: self.dim, coords: self.coords.iter().map(|e| e.scale(a)).collect() }
    }

    pub fn add_constant(&self, op: &HermitianOperator) -> Self {
        self.add(&Self::constant(op))
    }

    /// `Tr(self * op)`.
    pub fn inner(&self, op: &HermitianOperator) -> LinExpr {
        assert_eq!(self.dim, op.dim(), "matrix expression dimension mismatch");
        let mut out = LinExpr::zero();
        for (e, v) in self.coords.iter().zip(op.to_coords()) {
            if v != 0.0 {
                out.add_scaled(v, e);
            }
        }
        out
    }

    pub fn trace(&self) -> LinExpr {
        let mut out = LinExpr::zero();
        for e in &self.coords[..self.dim] {
            out.add_scaled(1.0, e);
        }
        out
    }

    /// Image under a real-linear map of Hermitian matrices, given as a closure.
    pub fn map(&self, out_dim: usize, f: impl Fn(&HermitianOperator) -> HermitianOperator) -> Self {
        let mut coords = vec![LinExpr::zero(); out_dim * out_dim];
        for (k, basis) in HermitianOperator::real_basis(self.dim).iter().enumerate() {
            if self.coords[k].terms.is_empty() && self.coords[k].constant == 0.0 {
                continue;
            }
            let image = f(basis);
            assert_eq!(image.dim(), out_dim, "linear map output dimension mismatch");
            for (j, v) in image.to_coords().into_iter().enumerate() {
                if v.abs() > COEFF_EPS {
                    coords[j].add_scaled(v, &self.coords[k]);
                }
            }
        }
        Self { dim: out_dim, coords: coords.into_iter().map(LinExpr::compact).collect() }
    }

    /// Principal submatrix on the given ascending index list.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut coords = vec![LinExpr::zero(); k * k];
        for (a, &i) in idx.iter().enumerate() {
            coords[a] = self.coords[i].clone();
            for (b, &j) in idx.iter().enumerate().skip(a + 1) {
                assert!(i < j, "submatrix indices must be ascending");
                let (sr, si) = offdiag_coords(self.dim, i, j);
                let (dr, di) = offdiag_coords(k, a, b);
                coords[dr] = self.coords[sr].clone();
                coords[di] = self.coords[si].clone();
            }
        }
        Self { dim: k, coords }
    }

    pub fn eval(&self, x: &[f64]) -> HermitianOperator {
        let c: Vec<f64> = self.coords.iter().map(|e| e.eval(x)).collect();
        HermitianOperator::from_coords(self.dim, &c).expect("coordinate count matches dimension")
    }
}

/// Arrow matrix `[[t I, y], [y^dagger, t]]`, which is PSD iff `||y||_2 <= t`.
/// `y` is given as (real part, imaginary part) pairs.
pub fn embed_soc(y: &[(LinExpr, LinExpr)], t: &LinExpr) -> MatExpr {
    let n = y.len();
    MatExpr::from_entries(n + 1, |i, j| {
        if i == j {
            (t.clone(), LinExpr::zero())
        } else if j == n {
            y[i].clone()
        } else {
            (LinExpr::zero(), LinExpr::zero())
        }
    })
}

/// Real symmetric embedding `[[Re A, -Im A], [Im A, Re A]]`.
pub fn real_embedding(op: &HermitianOperator) -> DMatrix<f64> {
    let n = op.dim();
    let m = op.matrix();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Conic program under construction.
#[derive(Debug, Clone)]
pub struct Model {
    problem: ConicProblem,
    objective: LinExpr,
}

impl Default for Model {
    fn default() -> Self {
        Self::new()
    }
}

impl Model {
    pub fn new() -> Self {
        Self { problem: ConicProblem::new(Sense::Minimize), objective: LinExpr::zero() }
    }

    pub fn problem(&self) -> &ConicProblem {
        &self.problem
    }

    /// Complex Hermitian PSD variable of size `n`, stored as a real PSD block of size `2n`.
    pub fn herm_psd(&mut self, n: usize) -> MatExpr {
        let o = self.problem.add_block(Cone::Psd(2 * n));
        let s = |r: usize, c: usize| o + svec_index(2 * n, r, c);
        let mut coords = vec![LinExpr::zero(); n * n];
        for i in 0..n {
            coords[i] = LinExpr { terms: vec![(s(i, i), 0.5), (s(n + i, n + i), 0.5)], constant: 0.0 };
            for j in (i + 1)..n {
                let (ri, ii) = offdiag_coords(n, i, j);
                coords[ri] = LinExpr { terms: vec![(s(j, i), 0.5), (s(n + j, n + i), 0.5)], constant: 0.0 };
                coords[ii] = LinExpr { terms: vec![(s(n + i, j), 0.5), (s(n + j, i), -0.5)], constant: 0.0 };
            }
        }
        MatExpr { dim: n, coords }
    }

    /// Unconstrained Hermitian variable.
    pub fn herm_free(&mut self, n: usize) -> MatExpr {
        let o = self.problem.add_block(Cone::Free(n * n));
        MatExpr { dim: n, coords: (0..n * n).map(|k| LinExpr::var(o + k)).collect() }
    }

    pub fn nonneg(&mut self) -> LinExpr {
        LinExpr::var(self.problem.add_block(Cone::Nonneg(1)))
    }

    pub fn nonneg_vec(&mut self, k: usize) -> Vec<LinExpr> {
        let o = self.problem.add_block(Cone::Nonneg(k));
        (0..k).map(|i| LinExpr::var(o + i)).collect()
    }

    pub fn free_scalar(&mut self) -> LinExpr {
        LinExpr::var(self.problem.add_block(Cone::Free(1)))
    }

    /// `lhs = rhs`.
    pub fn eq(&mut self, lhs: &LinExpr, rhs: &LinExpr) {
        let diff = lhs.sub(rhs).compact();
        if diff.terms.is_empty() && diff.constant.abs() <= COEFF_EPS {
            return;
        }
        self.problem.equalities.push(Equality { coeffs: diff.terms, rhs: -diff.constant });
    }

    /// `lhs >= rhs`, via a nonnegative slack.
    pub fn geq(&mut self, lhs: &LinExpr, rhs: &LinExpr) {
        let s = self.nonneg();
        self.eq(&lhs.sub(rhs), &s);
    }

    pub fn mat_eq(&mut self, a: &MatExpr, b: &MatExpr) {
        assert_eq!(a.dim, b.dim, "matrix expression dimension mismatch");
        for (x, y) in a.coords.iter().zip(&b.coords) {
            self.eq(x, y);
        }
    }

    /// `a ⪰ 0`.
    pub fn psd(&mut self, a: &MatExpr) {
        let y = self.herm_psd(a.dim);
        self.mat_eq(a, &y);
    }

    /// `||y||_2 <= t` through the arrow-matrix embedding.
    pub fn norm_bound(&mut self, y: &[(LinExpr, LinExpr)], t: &LinExpr) {
        let arrow = embed_soc(y, t);
        self.psd(&arrow);
    }

    pub fn minimize(&mut self, objective: LinExpr) {
        self.problem.sense = Sense::Minimize;
        self.objective = objective.compact();
    }

    pub fn maximize(&mut self, objective: LinExpr) {
        self.problem.sense = Sense::Maximize;
        self.objective = objective.compact();
    }

    pub fn solve(&self, solver: &dyn ConicSolver) -> Result<ModelSolution> {
        let mut problem = self.problem.clone();
        problem.objective = self.objective.terms.clone();
        let solution = solver.solve(&problem)?;
        let shift = self.objective.constant;
        Ok(ModelSolution { solution, shift })
    }
}

/// Solution of a [`Model`], with evaluators for expressions.
#[derive(Debug, Clone)]
pub struct ModelSolution {
    pub solution: ConicSolution,
    shift: f64,
}

impl ModelSolution {
    pub fn status(&self) -> SolveStatus {
        self.solution.status
    }

    pub fn is_optimal(&self) -> bool {
        self.solution.is_optimal()
    }

    /// Primal objective including the constant term.
    pub fn value(&self) -> f64 {
        self.solution.primal_objective + self.shift
    }

    pub fn dual_value(&self) -> f64 {
        self.solution.dual_objective + self.shift
    }

    /// Fails with the solver status unless optimal.
    pub fn optimal_value(&self) -> Result<f64> {
        self.solution.value().map(|v| v + self.shift)
    }

    pub fn eval(&self, e: &LinExpr) -> f64 {
        e.eval(&self.solution.x)
    }

    pub fn eval_mat(&self, e: &MatExpr) -> HermitianOperator {
        e.eval(&self.solution.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::InteriorPoint;
    use crate::linalg::{c, DensityOperator, PureStateVector};
    use crate::random::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn solver() -> InteriorPoint {
        InteriorPoint::default()
    }

    #[test]
    fn herm_psd_variable_evaluates_embedded_matrix() {
        let mut m = Model::new();
        let x = m.herm_psd(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let target = random_hermitian(3, &mut rng);
        let y = real_embedding(&target);
        let mut sv = vec![0.0; 21];
        for col in 0..6 {
            for r in col..6 {
                sv[svec_index(6, r, col)] = if r == col { y[(r, r)] } else { core::f64::consts::SQRT_2 * y[(r, col)] };
            }
        }
        assert!((&x.eval(&sv) - &target).max_abs_entry() < 1e-14);
    }

    #[test]
    fn coherence_witness_for_plus_state() {
        // max <W, |+><+|> s.t. W psd, diag(W) <= 1  -> 2
        let plus = PureStateVector::uniform(2).density();
        let mut m = Model::new();
        let w = m.herm_psd(2);
        for i in 0..2 {
            m.geq(&LinExpr::constant(1.0), w.diag(i));
        }
        m.maximize(w.inner(&plus));
        let sol = m.solve(&solver()).unwrap();
        assert_eq!(sol.status(), SolveStatus::Optimal);
        assert!((sol.value() - 2.0).abs() < 1e-7);
        assert!((sol.dual_value() - 2.0).abs() < 1e-7);
    }

    #[test]
    fn coherence_witness_matches_grid_oracle() {
        // Oracle: W = [[a, z], [z*, b]] with a, b <= 1 and |z|^2 <= ab.
        // For |+><+| the objective is (a + b)/2 + Re z; brute force over a grid.
        let mut best = f64::NEG_INFINITY;
        let steps = 200;
        for ia in 0..=steps {
            for ib in 0..=steps {
                let a = ia as f64 / steps as f64;
                let b = ib as f64 / steps as f64;
                let z = (a * b).sqrt();
                best = best.max(0.5 * (a + b) + z);
            }
        }
        assert!((best - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_is_optimal_effect() {
        let rho = DensityOperator::from_matrix(nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(0.3, 0.0)],
        ))
        .unwrap();
        let mut m = Model::new();
        let w = m.herm_psd(2);
        let slack = MatExpr::constant(&HermitianOperator::identity(2)).sub(&w);
        m.psd(&slack);
        m.maximize(w.inner(&rho));
        let sol = m.solve(&solver()).unwrap();
        assert!((sol.optimal_value().unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn soc_embedding_examples() {
        // minimize t s.t. ||(3, 4)|| <= t
        let mut m = Model::new();
        let t = m.free_scalar();
        m.norm_bound(&[(LinExpr::constant(3.0), LinExpr::zero()), (LinExpr::constant(4.0), LinExpr::zero())], &t);
        m.minimize(t.clone());
        let sol = m.solve(&solver()).unwrap();
        assert!((sol.optimal_value().unwrap() - 5.0).abs() < 1e-7);

        // complex y with |y| = 0.5
        let mut m = Model::new();
        let t = m.free_scalar();
        m.norm_bound(&[(LinExpr::constant(0.3), LinExpr::constant(0.4))], &t);
        m.minimize(t.clone());
        let sol = m.solve(&solver()).unwrap();
        assert!((sol.optimal_value().unwrap() - 0.5).abs() < 1e-7);

        // y = 0: any t >= 0 feasible, minimum 0
        let mut m = Model::new();
        let t = m.free_scalar();
        m.norm_bound(&[(LinExpr::zero(), LinExpr::zero())], &t);
        m.minimize(t.clone());
        let sol = m.solve(&solver()).unwrap();
        assert!(sol.optimal_value().unwrap().abs() < 1e-7);
    }

    #[test]
    fn submatrix_and_map_agree_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(4, &mut rng);
        let e = MatExpr::constant(&a);
        let sub = e.submatrix(&[1, 3]).eval(&[]);
        assert!((sub.entry(0, 1) - a.entry(1, 3)).norm_sqr() < 1e-28);
        assert!((sub.entry(1, 1) - a.entry(3, 3)).norm_sqr() < 1e-28);
        let pt = e.map(4, |x| x.partial_transpose((2, 2)).unwrap()).eval(&[]);
        assert!((&pt - &a.partial_transpose((2, 2)).unwrap()).max_abs_entry() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn real_embedding_psd_iff_hermitian_psd(seed in any::<u64>(), shift in -3.0f64..3.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = &random_hermitian(3, &mut rng) + &HermitianOperator::identity(3).scale(shift);
                let emin = a.min_eigenvalue();
                let y = real_embedding(&a);
                let ymin = y.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
                prop_assert!((emin - ymin).abs() < 1e-10);
                if emin.abs() > 1e-9 {
                    prop_assert_eq!(emin > 0.0, ymin > 0.0);
                }
            }
        }
    }
}

//! Resource quantifiers: generalized, standard and affine robustness, R_min,
//! pairwise max/min relative entropies and the hypothesis-testing relative
//! entropy together with its minimization over the free set or its affine hull.

use alloc::vec::Vec;

use crate::conic::model::{LinExpr, MatExpr, Model};
use crate::conic::{ConicSolver, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{DensityOperator, HermitianOperator, SUPPORT_TOL};
use crate::theory::TheoryDescriptor;

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// The value as `f64`, with `+∞` mapped to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn log2(&self) -> Extended {
        match *self {
            Extended::Finite(v) => Extended::Finite(v.log2()),
            Extended::Infinite => Extended::Infinite,
        }
    }
}

/// Value of a robustness-type monotone with its optimizers.
#[derive(Debug, Clone)]
pub struct MonotoneResult {
    pub value: Extended,
    /// Base-2 logarithm of `value`.
    pub log_value: Extended,
    /// Dual optimizer `W`.
    pub witness: Option<HermitianOperator>,
    /// Primal free state (normalized element of cone(F) in the decomposition).
    pub closest_free: Option<DensityOperator>,
    /// Primal mixing state `ω` (or free `δ` for the standard robustness).
    pub mixing: Option<DensityOperator>,
    /// Value of the independent primal formulation, when solved.
    pub primal_value: Option<f64>,
    /// `|primal - dual|` when both are solved, otherwise the solver duality gap.
    pub gap: f64,
    /// Largest relative duality gap over the conic solves used.
    pub solver_gap: f64,
}

impl MonotoneResult {
    fn finite(value: f64) -> Self {
        let value = value.max(1.0);
        Self {
            value: Extended::Finite(value),
            log_value: Extended::Finite(value.log2()),
            witness: None,
            closest_free: None,
            mixing: None,
            primal_value: None,
            gap: 0.0,
            solver_gap: 0.0,
        }
    }

    fn infinite() -> Self {
        Self {
            value: Extended::Infinite,
            log_value: Extended::Infinite,
            witness: None,
            closest_free: None,
            mixing: None,
            primal_value: None,
            gap: 0.0,
            solver_gap: 0.0,
        }
    }

    /// Finite value or an error naming the infinite result.
    pub fn finite_value(&self) -> Result<f64> {
        self.value.finite().ok_or_else(|| Error::Precondition("monotone is infinite".into()))
    }
}

fn check_dim(rho: &HermitianOperator, t: &TheoryDescriptor) -> Result<()> {
    if rho.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), found: rho.dim() });
    }
    Ok(())
}

/// Normalizes a PSD operator into a state; `None` when its trace is negligible.
fn normalized(op: &HermitianOperator) -> Option<DensityOperator> {
    if op.trace() <= 1e-12 {
        return None;
    }
    DensityOperator::project(op).ok()
}

/// Maximizes `<ρ, W>` over `W ⪰ 0` with `W` constrained by `constrain(model, W)`.
fn witness_program(
    rho: &HermitianOperator,
    solver: &dyn ConicSolver,
    constrain: impl FnOnce(&mut Model, &MatExpr),
) -> Result<(f64, HermitianOperator, f64)> {
    let mut m = Model::new();
    let w = m.herm_psd(rho.dim());
    constrain(&mut m, &w);
    m.maximize(w.inner(rho));
    let sol = m.solve(solver)?;
    let v = sol.optimal_value()?;
    Ok((v, sol.eval_mat(&w), sol.solution.relative_gap))
}

/// Dual value and witness of the generalized robustness, without the primal cross-check.
pub fn r_max_witness(rho: &HermitianOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<(f64, HermitianOperator)> {
    check_dim(rho, t)?;
    let (v, w, _) = witness_program(rho, solver, |m, w| t.constrain_polar(m, w, &LinExpr::constant(1.0)))?;
    Ok((v, w))
}

/// Generalized robustness `R_max(ρ) = max{<ρ, W> : W ⪰ 0, W ∈ F°}`, with the
/// primal `min{1 + Tr Ω : ρ + Ω ∈ cone(F), Ω ⪰ 0}` solved as a cross-check.
pub fn r_max(rho: &DensityOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<MonotoneResult> {
    check_dim(rho, t)?;
    let (dual, witness, g1) = witness_program(rho, solver, |m, w| t.constrain_polar(m, w, &LinExpr::constant(1.0)))?;

    let mut m = Model::new();
    let omega = m.herm_psd(t.dim());
    let sigma = t.cone_element(&mut m);
    m.mat_eq(&MatExpr::constant(rho).add(&omega), &sigma);
    m.minimize(omega.trace().plus(1.0));
    let sol = m.solve(solver)?;
    let primal = sol.optimal_value()?;

    let mut out = MonotoneResult::finite(dual);
    out.witness = Some(witness);
    out.closest_free = normalized(&sol.eval_mat(&sigma));
    out.mixing = normalized(&sol.eval_mat(&omega));
    out.primal_value = Some(primal);
    out.gap = (primal - dual).abs();
    out.solver_gap = g1.max(sol.solution.relative_gap);
    Ok(out)
}

/// Standard robustness `R_s(ρ) = min{1 + Tr S : ρ + S ∈ cone(F), S ∈ cone(F)}`,
/// infinite when `ρ ∉ span(F)` or the program is infeasible.
pub fn r_std(rho: &DensityOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<MonotoneResult> {
    check_dim(rho, t)?;
    if t.span_residual(rho)? > 1e-9 {
        return Ok(MonotoneResult::infinite());
    }
    let mut m = Model::new();
    let s = t.cone_element(&mut m);
    let sigma = t.cone_element(&mut m);
    m.mat_eq(&MatExpr::constant(rho).add(&s), &sigma);
    m.minimize(s.trace().plus(1.0));
    let sol = m.solve(solver)?;
    match sol.status() {
        SolveStatus::Infeasible => Ok(MonotoneResult::infinite()),
        SolveStatus::Optimal => {
            let mut out = MonotoneResult::finite(sol.value());
            out.closest_free = normalized(&sol.eval_mat(&sigma));
            out.mixing = normalized(&sol.eval_mat(&s));
            out.gap = sol.solution.gap;
            out.solver_gap = sol.solution.relative_gap;
            Ok(out)
        }
        status => Err(Error::Solver(status)),
    }
}

/// Largest overlap `max_{σ ∈ F} <X, σ>` and its optimizer.
pub fn max_free_overlap(
    x: &HermitianOperator,
    t: &TheoryDescriptor,
    solver: &dyn ConicSolver,
) -> Result<(f64, DensityOperator, f64)> {
    check_dim(x, t)?;
    let mut m = Model::new();
    let sigma = t.free_state(&mut m);
    m.maximize(sigma.inner(x));
    let sol = m.solve(solver)?;
    let v = sol.optimal_value()?;
    Ok((v, DensityOperator::project(&sol.eval_mat(&sigma))?, sol.solution.relative_gap))
}

/// Smallest overlap `min_{σ ∈ F} <X, σ>`.
pub fn min_free_overlap(x: &HermitianOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<f64> {
    check_dim(x, t)?;
    let mut m = Model::new();
    let sigma = t.free_state(&mut m);
    m.minimize(sigma.inner(x));
    m.solve(solver)?.optimal_value()
}

/// `R_min(ρ) = 1 / max_{σ ∈ F} <Π_ρ, σ>` with `Π_ρ` the support projector.
pub fn r_min(rho: &DensityOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<MonotoneResult> {
    check_dim(rho, t)?;
    let proj = rho.support_projector(SUPPORT_TOL)?;
    let (overlap, sigma, gap) = max_free_overlap(&proj, t, solver)?;
    if overlap <= 0.0 {
        return Ok(MonotoneResult::infinite());
    }
    let mut out = MonotoneResult::finite(1.0 / overlap);
    out.closest_free = Some(sigma);
    out.solver_gap = gap;
    Ok(out)
}

/// Affine robustness `R_max^♭(ρ) = max{<ρ, W> : W ⪰ 0, W ∈ F^♭}` with the
/// primal over `λ aff(F)` solved as a cross-check.
pub fn r_max_affine(rho: &DensityOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<MonotoneResult> {
    check_dim(rho, t)?;
    let (dual, witness, g1) =
        witness_program(rho, solver, |m, w| t.constrain_affine_polar(m, w, &LinExpr::constant(1.0)))?;

    let mut m = Model::new();
    let omega = m.herm_psd(t.dim());
    let x = MatExpr::constant(rho).add(&omega);
    let lambda = omega.trace().plus(1.0);
    t.constrain_affine_hull(&mut m, &x, &lambda);
    m.minimize(lambda);
    let sol = m.solve(solver)?;
    let primal = sol.optimal_value()?;

    let mut out = MonotoneResult::finite(dual);
    out.witness = Some(witness);
    out.mixing = normalized(&sol.eval_mat(&omega));
    out.primal_value = Some(primal);
    out.gap = (primal - dual).abs();
    out.solver_gap = g1.max(sol.solution.relative_gap);
    Ok(out)
}

/// `D_max(ρ‖σ) = log2 λ_max(σ^{-1/2} ρ σ^{-1/2})`, infinite unless `supp ρ ⊆ supp σ`.
pub fn d_max_pair(rho: &DensityOperator, sigma: &DensityOperator) -> Result<Extended> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    let proj = sigma.support_projector(SUPPORT_TOL)?;
    let outside = rho.trace() - rho.inner(&proj);
    if outside > 1e-9 {
        return Ok(Extended::Infinite);
    }
    let cutoff = SUPPORT_TOL * sigma.max_eigenvalue().max(1.0);
    let inv_sqrt = sigma.spectral_map(|x| if x > cutoff { 1.0 / x.sqrt() } else { 0.0 });
    let m = HermitianOperator::from_matrix_unchecked(inv_sqrt.matrix() * rho.matrix() * inv_sqrt.matrix());
    Ok(Extended::Finite(m.max_eigenvalue().log2()))
}

/// `D_min(ρ‖σ) = -log2 <Π_ρ, σ>`.
pub fn d_min_pair(rho: &DensityOperator, sigma: &DensityOperator) -> Result<Extended> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    let overlap = rho.support_projector(SUPPORT_TOL)?.inner(sigma);
    if overlap <= 1e-14 {
        return Ok(Extended::Infinite);
    }
    Ok(Extended::Finite(-overlap.log2()))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(alloc::format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Adds a test operator `0 ⪯ W ⪯ I` with `<W, ρ> >= 1 - ε`. At `ε = 0` the
/// constraint forces `W = Π_ρ + Q V Q` with `Q` the kernel of `ρ`, which is
/// imposed directly: the value is not Lipschitz in the acceptance threshold
/// there, so the inequality form loses accuracy to round-off.
fn test_operator(m: &mut Model, rho: &DensityOperator, epsilon: f64) -> Result<MatExpr> {
    let d = rho.dim();
    if epsilon > 0.0 {
        let w = m.herm_psd(d);
        m.psd(&MatExpr::constant(&HermitianOperator::identity(d)).sub(&w));
        m.geq(&w.inner(rho), &LinExpr::constant(1.0 - epsilon));
        return Ok(w);
    }
    let proj = rho.support_projector(SUPPORT_TOL)?;
    let eig = rho.eigh();
    let cutoff = SUPPORT_TOL * eig.values[d - 1].abs().max(1.0);
    let kernel: Vec<usize> = (0..d).filter(|&k| eig.values[k] <= cutoff).collect();
    if kernel.is_empty() {
        return Ok(MatExpr::constant(&HermitianOperator::identity(d)));
    }
    let q = eig.vectors.select_columns(&kernel);
    let v = m.herm_psd(kernel.len());
    m.psd(&MatExpr::constant(&HermitianOperator::identity(kernel.len())).sub(&v));
    Ok(v.map(d, |x| x.conjugate_by(&q)).add_constant(&proj))
}

/// Hypothesis-testing relative entropy
/// `D_H^ε(ρ‖σ) = -log2 min{<M, σ> : 0 ⪯ M ⪯ I, <M, ρ> >= 1 - ε}`.
/// `σ` may be any Hermitian operator; a nonpositive minimum gives `+∞`.
pub fn d_h(rho: &DensityOperator, sigma: &HermitianOperator, epsilon: f64, solver: &dyn ConicSolver) -> Result<Extended> {
    check_epsilon(epsilon)?;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    let mut m = Model::new();
    let test = test_operator(&mut m, rho, epsilon)?;
    let v = if test.coords().iter().all(LinExpr::is_constant) {
        test.eval(&[]).inner(sigma)
    } else {
        m.minimize(test.inner(sigma));
        m.solve(solver)?.optimal_value()?
    };
    if v <= 0.0 {
        return Ok(Extended::Infinite);
    }
    Ok(Extended::Finite(-v.log2()))
}

/// Set over which the hypothesis-testing entropy is minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    FreeSet,
    AffineHull,
}

/// Minimum of the hypothesis-testing relative entropy over the domain.
#[derive(Debug, Clone)]
pub struct HypothesisTestResult {
    /// `-log2 λ*`.
    pub log_value: Extended,
    /// Optimal scale `λ*`.
    pub lambda: f64,
    /// Optimal test `W`.
    pub witness: HermitianOperator,
    pub solver_gap: f64,
}

/// `min_{σ ∈ F or aff(F)} D_H^ε(ρ‖σ)` as the single program
/// `min{λ : <ρ, W> >= 1 - ε, 0 ⪯ W ⪯ I, W ∈ λ F° (or λ F^♭)}`.
pub fn d_h_min_over(
    rho: &DensityOperator,
    epsilon: f64,
    t: &TheoryDescriptor,
    domain: Domain,
    solver: &dyn ConicSolver,
) -> Result<HypothesisTestResult> {
    check_epsilon(epsilon)?;
    check_dim(rho, t)?;
    let mut m = Model::new();
    let w = test_operator(&mut m, rho, epsilon)?;
    let lambda = m.free_scalar();
    match domain {
        Domain::FreeSet => t.constrain_polar(&mut m, &w, &lambda),
        Domain::AffineHull => t.constrain_affine_polar(&mut m, &w, &lambda),
    }
    m.minimize(lambda.clone());
    let sol = m.solve(solver)?;
    let v = sol.optimal_value()?;
    let log_value = if v <= 0.0 { Extended::Infinite } else { Extended::Finite(-v.log2()) };
    Ok(HypothesisTestResult { log_value, lambda: v, witness: sol.eval_mat(&w), solver_gap: sol.solution.relative_gap })
}

/// Same quantity as [`d_h_min_over`], obtained as `log2 max{k : G(ρ; k) >= 1 - ε}`
/// by bisection over `k` using the G-value programs.
pub fn d_h_min_over_bisection(
    rho: &DensityOperator,
    epsilon: f64,
    t: &TheoryDescriptor,
    domain: Domain,
    solver: &dyn ConicSolver,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_dim(rho, t)?;
    let (robustness, affine) = match domain {
        Domain::FreeSet => (r_max(rho, t, solver)?, false),
        Domain::AffineHull => (r_max_affine(rho, t, solver)?, true),
    };
    // G(ρ; k) <= R(ρ) / k, so every k above R(ρ) / (1 - ε) fails the threshold.
    let mut lo = 1.0;
    let mut hi = (robustness.finite_value()? / (1.0 - epsilon)).max(1.0) * (1.0 + 1e-9);
    let target = 1.0 - epsilon;
    for _ in 0..60 {
        if hi / lo - 1.0 <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let g = crate::distillation::g_program(rho, mid, t, affine, solver)?;
        if g.value >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).log2())
}

/// The ordered chain `R_min(ρ) <= R_max(ρ) <= R_s(ρ)` for one state.
pub fn monotone_chain(rho: &DensityOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<[Extended; 3]> {
    Ok([r_min(rho, t, solver)?.value, r_max(rho, t, solver)?.value, r_std(rho, t, solver)?.value])
}

/// Lower bound `Tr(ρ²) / max_{σ ∈ F} <ρ, σ>` on the generalized robustness,
/// from the feasible dual point `W = ρ / max_σ <ρ, σ>`.
pub fn purity_lower_bound(rho: &DensityOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<f64> {
    let (overlap, _, _) = max_free_overlap(rho, t, solver)?;
    Ok(rho.purity() / overlap)
}

/// Sorted eigenvalues helper for callers that need spectra as plain vectors.
pub fn spectrum(op: &HermitianOperator) -> Vec<f64> {
    op.eigenvalues()
}

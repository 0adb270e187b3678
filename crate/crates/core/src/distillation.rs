//! One-shot distillation: the G-value programs, fidelity bounds, golden states,
//! measure-and-prepare channels, yields, interconversion and the pure-state
//! gauge decomposition.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{apply_choi, build_channel, verify_free_channel, ChoiMatrix, FreeChannelCheck};
use crate::conic::model::{LinExpr, MatExpr, Model};
use crate::conic::{ConicSolver, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{c, schmidt, CVector, DensityOperator, HermitianOperator, PureStateVector, C64};
use crate::monotones::{
    d_h_min_over, max_free_overlap, min_free_overlap, r_max, r_max_affine, r_max_witness, r_min, r_std, Domain, Extended,
};
use crate::random::random_pure;
use crate::theory::{bipartitions, TheoryDescriptor, TheoryKind};

/// Spread of free-state overlaps below which the overlap counts as constant.
pub const CONSTANT_OVERLAP_TOL: f64 = 1e-7;
/// Bound gap below which a fidelity report is exact.
pub const EXACT_TOL: f64 = 1e-6;

/// Value of `max{<ρ, W> : 0 ⪯ W ⪯ I, W ∈ (1/k) F°}` (or `F^♭` when `affine`).
#[derive(Debug, Clone)]
pub struct GValue {
    pub k: f64,
    pub value: f64,
    pub witness: HermitianOperator,
    pub affine: bool,
    pub status: SolveStatus,
}

/// Solves the G-value program; an infeasible affine program reports value 0.
pub fn g_program(rho: &DensityOperator, k: f64, t: &TheoryDescriptor, affine: bool, solver: &dyn ConicSolver) -> Result<GValue> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("k must be a finite number >= 1, got {k}")));
    }
    if rho.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), found: rho.dim() });
    }
    let d = t.dim();
    let mut m = Model::new();
    let w = m.herm_psd(d);
    m.psd(&MatExpr::constant(&HermitianOperator::identity(d)).sub(&w));
    let s = LinExpr::constant(1.0 / k);
    if affine {
        t.constrain_affine_polar(&mut m, &w, &s);
    } else {
        t.constrain_polar(&mut m, &w, &s);
    }
    m.maximize(w.inner(rho));
    let sol = m.solve(solver)?;
    match sol.status() {
        SolveStatus::Optimal => Ok(GValue { k, value: sol.value(), witness: sol.eval_mat(&w), affine, status: SolveStatus::Optimal }),
        SolveStatus::Infeasible if affine => {
            Ok(GValue { k, value: 0.0, witness: HermitianOperator::zeros(d), affine, status: SolveStatus::Infeasible })
        }
        status => Err(Error::Solver(status)),
    }
}

/// `G(ρ; k)`.
pub fn g_value(rho: &DensityOperator, k: f64, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<GValue> {
    g_program(rho, k, t, false, solver)
}

/// `G^♭(ρ; k)`.
pub fn g_affine(rho: &DensityOperator, k: f64, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<GValue> {
    g_program(rho, k, t, true, solver)
}

/// Smallest and largest overlap `<φ, σ>` over free states.
pub fn overlap_range(phi: &PureStateVector, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<(f64, f64)> {
    let p = phi.density();
    let lo = min_free_overlap(&p, t, solver)?;
    let (hi, _, _) = max_free_overlap(&p, t, solver)?;
    Ok((lo, hi))
}

/// Whether `<φ, σ>` takes the same value on every free state.
pub fn constant_overlap_check(phi: &PureStateVector, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<bool> {
    let (lo, hi) = overlap_range(phi, t, solver)?;
    Ok(hi - lo <= CONSTANT_OVERLAP_TOL)
}

/// Program that produced a fidelity bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMechanism {
    /// `G(ρ; R_min(φ))` from above, `G(ρ; R_s(φ))` from below.
    GValue,
    /// `G^♭(ρ; R_min(φ))` from above for constant-overlap targets, `G^♭(ρ; R_max(φ))` from below.
    AffineGValue,
    /// `R_max(ρ) / R_min(φ_m)` from above, `R_max(ρ) / R_s(φ_m)` from below.
    RobustnessRatio,
    /// `R_max^♭(ρ) / R_max(φ_m)` from below.
    AffineRobustnessRatio,
}

/// Reason a fidelity report is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactReason {
    /// The computed bounds coincide.
    BoundsCoincide,
    /// Golden target with `R_max(φ_m) = R_s(φ_m)`.
    StandardRobustnessMatch,
    /// Golden target in an affine theory.
    AffineTheory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConditionFlags {
    pub constant_overlap: bool,
    pub rs_finite: bool,
    pub target_is_golden: bool,
}

/// Upper and lower bounds on the optimal distillation fidelity.
#[derive(Debug, Clone)]
pub struct FidelityReport {
    pub upper: f64,
    pub lower: f64,
    pub exact: bool,
    pub upper_mechanism: BoundMechanism,
    pub lower_mechanism: BoundMechanism,
    pub exact_reason: Option<ExactReason>,
    pub flags: ConditionFlags,
    /// The target state (the golden state for [`fidelity_max_golden`]).
    pub target: PureStateVector,
}

fn resourceful_r_min(phi: &PureStateVector, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<f64> {
    let rmin = r_min(&phi.density(), t, solver)?.value.to_f64();
    if rmin <= 1.0 + 1e-9 {
        return Err(Error::DegenerateTarget(rmin));
    }
    Ok(rmin)
}

/// Whether a state with generalized robustness `rmax_phi` attains the largest generalized robustness of the theory,
/// judged against the closed-form golden state; `false` when none is known.
fn is_golden(rmax_phi: f64, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<bool> {
    match t.golden_analytic() {
        Some(g) => Ok((r_max(&g.density(), t, solver)?.value.to_f64() - rmax_phi).abs() <= EXACT_TOL),
        None => Ok(false),
    }
}

/// Bounds on `max_Λ <Λ(ρ), φ>` over resource non-generating channels.
pub fn fidelity_bounds(
    rho: &DensityOperator,
    phi: &PureStateVector,
    t: &TheoryDescriptor,
    solver: &dyn ConicSolver,
) -> Result<FidelityReport> {
    if phi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: phi.dim() });
    }
    let rmin = resourceful_r_min(phi, t, solver)?;
    let mut flags = ConditionFlags { constant_overlap: constant_overlap_check(phi, t, solver)?, ..Default::default() };

    let mut upper = g_value(rho, rmin, t, solver)?.value;
    let mut upper_mechanism = BoundMechanism::GValue;
    if flags.constant_overlap {
        let ga = g_affine(rho, rmin, t, solver)?;
        if ga.status == SolveStatus::Optimal && ga.value < upper {
            upper = ga.value;
            upper_mechanism = BoundMechanism::AffineGValue;
        }
    }

    let mut lower = f64::NEG_INFINITY;
    let mut lower_mechanism = BoundMechanism::AffineGValue;
    if let Extended::Finite(rs) = r_std(&phi.density(), t, solver)?.value {
        flags.rs_finite = true;
        lower = g_value(rho, rs, t, solver)?.value;
        lower_mechanism = BoundMechanism::GValue;
    }
    let rmax_phi = r_max(&phi.density(), t, solver)?.value.to_f64();
    let ga = g_affine(rho, rmax_phi, t, solver)?;
    if ga.value > lower {
        lower = ga.value;
        lower_mechanism = BoundMechanism::AffineGValue;
    }
    flags.target_is_golden = is_golden(rmax_phi, t, solver)?;

    let exact = upper - lower <= EXACT_TOL;
    Ok(FidelityReport {
        upper,
        lower,
        exact,
        upper_mechanism,
        lower_mechanism,
        exact_reason: exact.then_some(ExactReason::BoundsCoincide),
        flags,
        target: phi.clone(),
    })
}

/// Closed-form golden state when known, otherwise the best state found by [`golden_search`].
pub fn golden_target(t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<PureStateVector> {
    match t.golden_analytic() {
        Some(g) => Ok(g),
        None => Ok(golden_search(t, 20, 1e-6, 0, solver)?.state),
    }
}

/// Bounds on the fidelity of distilling the golden state `φ_m` from `ρ`,
/// expressed through robustness ratios.
pub fn fidelity_max_golden(rho: &DensityOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<FidelityReport> {
    let phi = golden_target(t, solver)?;
    let pm = phi.density();
    let rmax_rho = r_max(rho, t, solver)?.value.to_f64();
    let rmin_m = resourceful_r_min(&phi, t, solver)?;
    let rmax_m = r_max(&pm, t, solver)?.value.to_f64();
    let rs_m = r_std(&pm, t, solver)?.value;

    let upper = (rmax_rho / rmin_m).min(1.0);
    let (lower, lower_mechanism) = match rs_m {
        Extended::Finite(rs) => (rmax_rho / rs, BoundMechanism::RobustnessRatio),
        Extended::Infinite => (r_max_affine(rho, t, solver)?.value.to_f64() / rmax_m, BoundMechanism::AffineRobustnessRatio),
    };
    let lower = lower.min(upper.max(lower.min(1.0)));
    let reason = if t.is_affine() {
        Some(ExactReason::AffineTheory)
    } else if rs_m.finite().is_some_and(|rs| (rs - rmax_m).abs() <= EXACT_TOL) {
        Some(ExactReason::StandardRobustnessMatch)
    } else {
        None
    };
    let exact = reason.is_some() && upper - lower <= EXACT_TOL;
    Ok(FidelityReport {
        upper,
        lower,
        exact,
        upper_mechanism: BoundMechanism::RobustnessRatio,
        lower_mechanism,
        exact_reason: if exact { reason } else { None },
        flags: ConditionFlags {
            constant_overlap: constant_overlap_check(&phi, t, solver)?,
            rs_finite: rs_m.is_finite(),
            target_is_golden: true,
        },
        target: phi,
    })
}

/// One evaluation of the golden-state ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchStep {
    pub restart: usize,
    pub iteration: usize,
    pub r_max: f64,
}

/// Candidate golden state with its two robustness values.
#[derive(Debug, Clone)]
pub struct GoldenCertificate {
    pub state: PureStateVector,
    pub r_min: f64,
    pub r_max: f64,
    /// `|r_min - r_max| <= tol`, a necessary condition for a golden state.
    pub matched: bool,
    /// Whether the state is the closed-form golden state of the theory.
    pub analytic: bool,
    pub search_trace: Vec<SearchStep>,
}

/// Orders amplitude vectors lexicographically by (real, imaginary) parts.
fn lex_cmp(a: &CVector, b: &CVector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        for (u, v) in [(x.re, y.re), (x.im, y.im)] {
            if (u - v).abs() > 1e-9 {
                return u.total_cmp(&v);
            }
        }
    }
    Ordering::Equal
}

fn top_eigenvector(w: &HermitianOperator) -> Result<PureStateVector> {
    let eig = w.eigh();
    let n = w.dim();
    Ok(PureStateVector::normalize(eig.vectors.column(n - 1).into_owned())?.with_canonical_phase())
}

/// Heuristic search for a pure state of largest generalized robustness.
///
/// Each restart starts from a random pure state and repeatedly moves to the top
/// eigenvector of the current robustness witness `W`; since `W` stays feasible,
/// `R_max` never decreases along the path. The best candidate over all restarts
/// (ties broken by the lexicographically smallest canonical amplitude vector)
/// is returned together with its `R_min` and `R_max`. When the theory has a
/// closed-form golden state it is included as a candidate and preferred on ties.
pub fn golden_search(
    t: &TheoryDescriptor,
    restarts: usize,
    tol: f64,
    seed: u64,
    solver: &dyn ConicSolver,
) -> Result<GoldenCertificate> {
    const MAX_STEPS: usize = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Vec::new();
    let mut best: Option<(f64, PureStateVector)> = None;
    let consider = |value: f64, psi: PureStateVector, best: &mut Option<(f64, PureStateVector)>| {
        let better = match best {
            None => true,
            Some((v, b)) => value > *v + 1e-7 || ((value - *v).abs() <= 1e-7 && lex_cmp(psi.amplitudes(), b.amplitudes()) == Ordering::Less),
        };
        if better {
            *best = Some((value, psi));
        }
    };

    for restart in 0..restarts {
        let mut psi = random_pure(t.dim(), &mut rng).with_canonical_phase();
        let (mut value, mut w) = r_max_witness(&psi.density(), t, solver)?;
        trace.push(SearchStep { restart, iteration: 0, r_max: value });
        for iteration in 1..=MAX_STEPS {
            let next = top_eigenvector(&w)?;
            let (v, wn) = r_max_witness(&next.density(), t, solver)?;
            if v <= value + 1e-9 {
                break;
            }
            trace.push(SearchStep { restart, iteration, r_max: v });
            psi = next;
            value = v;
            w = wn;
        }
        consider(value, psi, &mut best);
    }

    let analytic = t.golden_analytic().map(|g| g.with_canonical_phase());
    let mut chose_analytic = false;
    if let Some(g) = &analytic {
        let (v, _) = r_max_witness(&g.density(), t, solver)?;
        let beats = best.as_ref().is_none_or(|(b, _)| v >= *b - 1e-7);
        if beats {
            best = Some((v, g.clone()));
            chose_analytic = true;
        }
    }
    let (_, state) = best.ok_or_else(|| Error::InvalidParameter("golden search needs at least one restart or a closed form".into()))?;
    let rho = state.density();
    let rmax = r_max(&rho, t, solver)?.value.to_f64();
    let rmin = r_min(&rho, t, solver)?.value.to_f64();
    Ok(GoldenCertificate { state, r_min: rmin, r_max: rmax, matched: (rmin - rmax).abs() <= tol, analytic: chose_analytic, search_trace: trace })
}

/// Measure-and-prepare channel distilling the golden state.
#[derive(Debug, Clone)]
pub struct DistillationChannel {
    pub choi: ChoiMatrix,
    /// `<Λ(ρ), φ_m>`.
    pub achieved: f64,
    pub target: PureStateVector,
    pub free_check: FreeChannelCheck,
}

/// Free state to prepare on the "fail" outcome, from the robustness primal of `φ_m`.
fn fail_state(mixing: Option<DensityOperator>, scale: f64, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<DensityOperator> {
    match mixing {
        Some(d) if scale - 1.0 > 1e-9 => Ok(d),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            t.sample_free_state(&mut rng, solver)
        }
    }
}

/// Builds `Λ(X) = <W/R, X> φ_m + <I - W/R, X> δ` from the robustness witness of
/// `ρ` and the robustness decomposition of the golden state `φ_m`, and checks it is free.
pub fn optimal_distillation_channel(rho: &DensityOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<DistillationChannel> {
    let phi = golden_target(t, solver)?;
    let pm = phi.density();
    let (w, scale, delta) = if t.is_affine() {
        let w = r_max_affine(rho, t, solver)?.witness.expect("dual solved");
        let rm = r_max(&pm, t, solver)?;
        let scale = rm.value.to_f64();
        (w, scale, fail_state(rm.mixing, scale, t, solver)?)
    } else {
        let w = r_max(rho, t, solver)?.witness.expect("dual solved");
        let rs = r_std(&pm, t, solver)?;
        let scale = rs
            .value
            .finite()
            .ok_or_else(|| Error::Precondition("golden state has infinite standard robustness".into()))?;
        (w, scale, fail_state(rs.mixing, scale, t, solver)?)
    };
    let choi = build_channel(&w.scale(1.0 / scale), &phi, &delta)?;
    let achieved = apply_choi(&choi, rho)?.inner(&pm);
    let free_check = verify_free_channel(&choi, t, 4, solver)?;
    Ok(DistillationChannel { choi, achieved, target: phi, free_check })
}

/// Whether exact distillation of a resourceful pure state is not excluded by
/// a free state lying inside the support of `ρ`.
#[derive(Debug, Clone)]
pub struct ExactDistillation {
    pub possible: bool,
    /// `max_{σ ∈ F} <Π_ρ, σ>`.
    pub max_overlap: f64,
    /// A free state supported inside `supp ρ` when `possible` is false.
    pub witness: Option<DensityOperator>,
}

pub fn exact_distillation_possible(rho: &DensityOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<ExactDistillation> {
    let proj = rho.support_projector(crate::linalg::SUPPORT_TOL)?;
    let (overlap, sigma, _) = max_free_overlap(&proj, t, solver)?;
    let blocked = overlap >= 1.0 - 1e-8;
    Ok(ExactDistillation { possible: !blocked, max_overlap: overlap, witness: blocked.then_some(sigma) })
}

/// One-shot distillable-resource bounds in log-robustness units.
#[derive(Debug, Clone, Copy)]
pub struct YieldBounds {
    /// No target with `D_min(φ)` above this is distillable at error `ε`.
    pub upper_log_r: Extended,
    /// Every target with `log R_max(φ)` at most this is distillable at error `ε`.
    pub lower_log_r: Extended,
    /// Full-dimensional theories: every target with `log R_s(φ)` at most this is distillable.
    pub lower_log_rs: Option<Extended>,
}

pub fn yield_bounds(rho: &DensityOperator, epsilon: f64, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<YieldBounds> {
    let upper = d_h_min_over(rho, epsilon, t, Domain::FreeSet, solver)?.log_value;
    let lower = d_h_min_over(rho, epsilon, t, Domain::AffineHull, solver)?.log_value;
    Ok(YieldBounds { upper_log_r: upper, lower_log_r: lower, lower_log_rs: t.is_full_dimensional().then_some(upper) })
}

/// Free channels converting `ρ` into the golden state and back.
#[derive(Debug, Clone)]
pub struct Interconversion {
    /// `Λ₁(ρ) = φ_m`.
    pub distill: DistillationChannel,
    /// `Λ₂(φ_m) = ρ`.
    pub dilute: ChoiMatrix,
    pub dilute_check: FreeChannelCheck,
}

/// Channels `Λ₁(ρ) = φ_m` and `Λ₂(φ_m) = ρ`, the latter `X ↦ <X, φ_m> ρ + <X, I - φ_m> δ'`
/// with `δ'` the mixing state of the robustness decomposition of `ρ`. Requires
/// `R_s(ρ) = R_s(φ_m)` in non-affine theories, and a constant-overlap `φ_m` with
/// `R_max(ρ) = R_max(φ_m)` in affine ones.
pub fn interconversion_channels(rho: &DensityOperator, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<Interconversion> {
    const TOL: f64 = 1e-6;
    let phi = golden_target(t, solver)?;
    let pm = phi.density();
    let (scale, mixing) = if t.is_affine() {
        if !constant_overlap_check(&phi, t, solver)? {
            return Err(Error::Precondition("golden state overlap with free states is not constant".into()));
        }
        let a = r_max(rho, t, solver)?;
        let b = r_max(&pm, t, solver)?.value.to_f64();
        if (a.value.to_f64() - b).abs() > TOL {
            return Err(Error::Precondition(alloc::format!("robustness {} differs from golden value {b}", a.value.to_f64())));
        }
        (b, a.mixing)
    } else {
        let a = r_std(rho, t, solver)?;
        let b = r_std(&pm, t, solver)?.value;
        match (a.value, b) {
            (Extended::Finite(x), Extended::Finite(y)) if (x - y).abs() <= TOL => (y, a.mixing),
            (x, y) => return Err(Error::Precondition(alloc::format!("standard robustness {x:?} differs from golden value {y:?}"))),
        }
    };
    let distill = optimal_distillation_channel(rho, t, solver)?;
    let delta = fail_state(mixing, scale, t, solver)?;
    let d = t.dim();
    let rest = &HermitianOperator::identity(d) - &pm;
    let j = &pm.transpose().tensor(rho) + &rest.transpose().tensor(&delta);
    let dilute = ChoiMatrix::new(j, (d, d))?;
    let dilute_check = verify_free_channel(&dilute, t, 4, solver)?;
    Ok(Interconversion { distill, dilute, dilute_check })
}

/// Optimal split `ψ = x + y` minimizing `γ(x)/√k + ||y||₂` with `γ` the gauge
/// of the free pure states (the ℓ1 norm for coherence).
#[derive(Debug, Clone)]
pub struct GaugeDecomposition {
    pub x: Vec<C64>,
    pub y: Vec<C64>,
    pub gamma_x: f64,
    pub norm_y: f64,
    pub objective: f64,
}

pub fn pure_g_decomposition(psi: &PureStateVector, k: f64, t: &TheoryDescriptor, solver: &dyn ConicSolver) -> Result<GaugeDecomposition> {
    if !matches!(t.kind(), TheoryKind::Coherence) {
        return Err(Error::UnsupportedTheory(alloc::format!("no pure-state gauge for {}", t.describe())));
    }
    if !(k >= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("k must be >= 1, got {k}")));
    }
    if psi.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), found: psi.dim() });
    }
    // Diagonal phases are free, so rotate ψ to nonnegative amplitudes and solve over reals.
    let amps = psi.amplitudes();
    let moduli: Vec<f64> = amps.iter().map(|z| z.norm_sqr().sqrt()).collect();
    let phases: Vec<C64> = amps.iter().zip(&moduli).map(|(z, &r)| if r > 1e-15 { *z / r } else { c(1.0, 0.0) }).collect();
    let d = psi.dim();

    let mut m = Model::new();
    let p = m.nonneg_vec(d);
    let q = m.nonneg_vec(d);
    let u = m.nonneg();
    let y: Vec<(LinExpr, LinExpr)> = (0..d).map(|i| (LinExpr::constant(moduli[i]).sub(&p[i]).add(&q[i]), LinExpr::zero())).collect();
    m.norm_bound(&y, &u);
    let mut obj = u.clone();
    for i in 0..d {
        obj.add_scaled(1.0 / k.sqrt(), &p[i]);
        obj.add_scaled(1.0 / k.sqrt(), &q[i]);
    }
    m.minimize(obj);
    let sol = m.solve(solver)?;
    sol.optimal_value()?;

    let xr: Vec<f64> = (0..d).map(|i| sol.eval(&p[i]) - sol.eval(&q[i])).collect();
    let x: Vec<C64> = xr.iter().zip(&phases).map(|(&v, ph)| *ph * v).collect();
    let y: Vec<C64> = amps.iter().zip(&x).map(|(a, b)| a - b).collect();
    let gamma_x: f64 = xr.iter().map(|v| v.abs()).sum();
    let norm_y = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(GaugeDecomposition { x, y, gamma_x, norm_y, objective: gamma_x / k.sqrt() + norm_y })
}

/// Robustness values of a multipartite pure state across one bipartition.
#[derive(Debug, Clone)]
pub struct CutValues {
    /// Parties on the first side of the cut.
    pub parties: Vec<usize>,
    pub schmidt: Vec<f64>,
    /// `1 / λ₁²`.
    pub r_min: f64,
    /// `(Σ λᵢ)²`, equal to the standard robustness across the cut.
    pub r_max: f64,
}

#[derive(Debug, Clone)]
pub struct GmeValues {
    pub per_cut: Vec<CutValues>,
    pub combined_r_min: f64,
    pub combined_r_max_upper: f64,
    /// `combined_r_min == combined_r_max_upper`, certifying the state golden.
    pub golden_chain: bool,
}

/// Reorders the tensor factors of `psi` so that `order[0]` becomes the first party.
fn permute_parties(psi: &CVector, local_dims: &[usize], order: &[usize]) -> CVector {
    let n = local_dims.len();
    let mut out = CVector::zeros(psi.len());
    let mut digits = alloc::vec![0usize; n];
    for (idx, amp) in psi.iter().enumerate() {
        let mut rem = idx;
        for k in (0..n).rev() {
            digits[k] = rem % local_dims[k];
            rem /= local_dims[k];
        }
        let mut new = 0;
        for &party in order {
            new = new * local_dims[party] + digits[party];
        }
        out[new] = *amp;
    }
    out
}

/// Closed-form per-bipartition values for a multipartite pure state.
pub fn gme_values(psi: &PureStateVector, local_dims: &[usize]) -> Result<GmeValues> {
    let total: usize = local_dims.iter().product();
    if local_dims.len() < 2 || total != psi.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim(), found: total });
    }
    let mut per_cut = Vec::new();
    for cut in bipartitions(local_dims.len()) {
        let side: Vec<usize> = (0..local_dims.len()).filter(|&k| cut[k]).collect();
        let other: Vec<usize> = (0..local_dims.len()).filter(|&k| !cut[k]).collect();
        let da: usize = side.iter().map(|&k| local_dims[k]).product();
        let order: Vec<usize> = side.iter().chain(&other).copied().collect();
        let permuted = PureStateVector::normalize(permute_parties(psi.amplitudes(), local_dims, &order))?;
        let s = schmidt(&permuted, (da, total / da))?.coefficients;
        let sum: f64 = s.iter().sum();
        per_cut.push(CutValues { parties: side, r_min: 1.0 / (s[0] * s[0]), r_max: sum * sum, schmidt: s });
    }
    let combined_r_min = per_cut.iter().map(|c| c.r_min).fold(f64::INFINITY, f64::min);
    let combined_r_max_upper = per_cut.iter().map(|c| c.r_max).fold(f64::INFINITY, f64::min);
    Ok(GmeValues { golden_chain: (combined_r_max_upper - combined_r_min).abs() <= 1e-9, per_cut, combined_r_min, combined_r_max_upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::channel::max_fidelity_channel;
    use crate::conic::InteriorPoint;
    use crate::linalg::BlockStructure;
    use crate::random::random_density;
    use crate::theory::asymmetry_golden_state;
    use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn solver() -> InteriorPoint {
        InteriorPoint::default()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn thermal(diag: &[f64]) -> TheoryDescriptor {
        TheoryDescriptor::thermal(DensityOperator::new(HermitianOperator::from_real_diagonal(diag)).unwrap()).unwrap()
    }

    fn asym2q() -> TheoryDescriptor {
        TheoryDescriptor::asymmetry(BlockStructure::new(4, vec![vec![0], vec![1, 2], vec![3]]).unwrap()).unwrap()
    }

    fn rho_p(p: f64) -> DensityOperator {
        DensityOperator::mixture(p, &PureStateVector::uniform(2).density(), &DensityOperator::maximally_mixed(2)).unwrap()
    }

    #[test]
    fn g_value_examples() {
        let coh = TheoryDescriptor::coherence(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let rho = random_density(2, &mut rng);
        assert!(close(g_value(&rho, 1.0, &coh, &solver()).unwrap().value, 1.0, 1e-7));
        let sigma = DensityOperator::new(HermitianOperator::from_real_diagonal(&[0.3, 0.7])).unwrap();
        for k in [1.5, 2.0, 5.0] {
            assert!(close(g_value(&sigma, k, &coh, &solver()).unwrap().value, 1.0 / k, 1e-7));
            assert!(close(g_affine(&sigma, k, &coh, &solver()).unwrap().value, 1.0 / k, 1e-7));
        }
        let plus = PureStateVector::uniform(2).density();
        let g = g_value(&plus, 2.0, &coh, &solver()).unwrap();
        assert!(close(g.value, 1.0, 1e-7));
        assert!(g.witness.min_eigenvalue() >= -1e-7 && g.witness.max_eigenvalue() <= 1.0 + 1e-7);
        assert!(close(g_value(&plus, 4.0, &coh, &solver()).unwrap().value, 0.5, 1e-7));
        assert!(g_value(&plus, 0.5, &coh, &solver()).is_err());
    }

    #[test]
    fn thermal_affine_g_matches_grid_oracle() {
        let th = thermal(&[2.0 / 3.0, 1.0 / 3.0]);
        let one = DensityOperator::basis_state(2, 1);
        let sdp = g_affine(&one, 3.0, &th, &solver()).unwrap().value;
        // Diagonal W = diag(a, b): (2a + b)/3 = 1/3, 0 <= a, b <= 1; maximize b.
        let mut best = 0.0f64;
        for i in 0..=2000 {
            let a = i as f64 / 2000.0;
            let b = 1.0 - 2.0 * a;
            if (0.0..=1.0).contains(&b) {
                best = best.max(b);
            }
        }
        assert!(close(sdp, best, 1e-6));
        assert!(close(sdp, 1.0, 1e-6));
    }

    #[test]
    fn g_value_is_bounded_and_nonincreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for t in [TheoryDescriptor::coherence(3).unwrap(), asym2q(), TheoryDescriptor::ppt(2, 2).unwrap()] {
            let rho = random_density(t.dim(), &mut rng);
            let mut prev = 1.0 + 1e-7;
            for k in [1.0, 1.3, 2.0, 2.7, 4.0] {
                let g = g_value(&rho, k, &t, &solver()).unwrap().value;
                assert!(g >= 1.0 / k - 1e-7 && g <= prev + 1e-7);
                prev = g;
            }
        }
    }

    #[test]
    fn constant_overlap_examples() {
        for d in [2, 3, 4] {
            let coh = TheoryDescriptor::coherence(d).unwrap();
            assert!(constant_overlap_check(&PureStateVector::uniform(d), &coh, &solver()).unwrap());
        }
        assert!(!constant_overlap_check(&asymmetry_golden_state(FRAC_PI_4), &asym2q(), &solver()).unwrap());
        let th = thermal(&[0.7, 0.3]);
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        assert!(constant_overlap_check(&random_pure(2, &mut rng), &th, &solver()).unwrap());
    }

    #[test]
    fn fidelity_bounds_examples() {
        let coh = TheoryDescriptor::coherence(2).unwrap();
        let plus = PureStateVector::uniform(2);
        let r = fidelity_bounds(&plus.density(), &plus, &coh, &solver()).unwrap();
        assert!(r.exact && close(r.upper, 1.0, 1e-6) && close(r.lower, 1.0, 1e-6));
        let rho = DensityOperator::mixture(0.9, &plus.density(), &DensityOperator::maximally_mixed(2)).unwrap();
        let r = fidelity_bounds(&rho, &plus, &coh, &solver()).unwrap();
        assert!(r.exact && close(r.upper, 0.95, 1e-6) && close(r.lower, 0.95, 1e-6));
        let (oracle, _) = max_fidelity_channel(&rho, &plus, &coh, &solver()).unwrap();
        assert!(close(oracle, 0.95, 1e-6));
        assert!(r.flags.constant_overlap && !r.flags.rs_finite && r.flags.target_is_golden);
        let free = PureStateVector::basis(2, 0);
        assert!(matches!(fidelity_bounds(&rho, &free, &coh, &solver()), Err(Error::DegenerateTarget(_))));
    }

    #[test]
    fn fidelity_max_golden_examples() {
        let coh = TheoryDescriptor::coherence(2).unwrap();
        for p in [0.0, 0.5, 0.9] {
            let r = fidelity_max_golden(&rho_p(p), &coh, &solver()).unwrap();
            assert!(r.exact && close(r.upper, (1.0 + p) / 2.0, 1e-6), "p = {p}: {r:?}");
            let (oracle, _) = max_fidelity_channel(&rho_p(p), &r.target, &coh, &solver()).unwrap();
            assert!(close(oracle, (1.0 + p) / 2.0, 1e-6));
        }
        let ppt = TheoryDescriptor::ppt(2, 2).unwrap();
        let r = fidelity_max_golden(&PureStateVector::maximally_entangled(2, 2).density(), &ppt, &solver()).unwrap();
        assert!(r.exact && close(r.upper, 1.0, 1e-6));
        assert_eq!(r.exact_reason, Some(ExactReason::StandardRobustnessMatch));
        let r = fidelity_max_golden(&DensityOperator::maximally_mixed(4), &ppt, &solver()).unwrap();
        assert!(close(r.upper, 0.5, 1e-6) && close(r.lower, 0.5, 1e-6));
    }

    #[test]
    fn golden_search_examples() {
        let coh = TheoryDescriptor::coherence(3).unwrap();
        let cert = golden_search(&coh, 4, 1e-6, 7, &solver()).unwrap();
        assert!(cert.matched && close(cert.r_max, 3.0, 1e-6));
        assert!(cert.state.amplitudes().iter().all(|z| close(z.norm_sqr(), 1.0 / 3.0, 1e-6)));
        let th = thermal(&[2.0 / 3.0, 1.0 / 3.0]);
        let cert = golden_search(&th, 4, 1e-6, 7, &solver()).unwrap();
        assert!(cert.matched && close(cert.r_max, 3.0, 1e-6));
        assert!(close(cert.state.amplitudes()[1].norm_sqr(), 1.0, 1e-6));
        let cert = golden_search(&asym2q(), 6, 1e-6, 7, &solver()).unwrap();
        assert!(cert.matched && close(cert.r_max, 3.0, 1e-6) && close(cert.r_min, 3.0, 1e-6));
    }

    #[test]
    fn search_without_closed_form_finds_golden_value() {
        let asym = TheoryDescriptor::asymmetry(BlockStructure::new(3, vec![vec![0, 1], vec![2]]).unwrap()).unwrap();
        assert!(asym.golden_analytic().is_none());
        let cert = golden_search(&asym, 8, 1e-6, 3, &solver()).unwrap();
        // Two blocks: the best pure state splits weight evenly across them.
        assert!(close(cert.r_max, 2.0, 1e-6) && cert.matched, "{cert:?}");
        let ppt = TheoryDescriptor::ppt(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let psi = random_pure(4, &mut rng);
        let (mut v, mut w) = r_max_witness(&psi.density(), &ppt, &solver()).unwrap();
        for _ in 0..10 {
            let next = top_eigenvector(&w).unwrap();
            let (vn, wn) = r_max_witness(&next.density(), &ppt, &solver()).unwrap();
            assert!(vn >= v - 1e-7);
            v = vn;
            w = wn;
        }
    }

    #[test]
    fn build_channel_attains_lower_bound() {
        let coh = TheoryDescriptor::coherence(2).unwrap();
        let plus = PureStateVector::uniform(2);
        let rho = rho_p(0.5);
        let r = fidelity_bounds(&rho, &plus, &coh, &solver()).unwrap();
        let rmax = r_max(&plus.density(), &coh, &solver()).unwrap();
        let ga = g_affine(&rho, rmax.value.to_f64(), &coh, &solver()).unwrap();
        let ch = build_channel(&ga.witness, &plus, &rmax.mixing.unwrap()).unwrap();
        let got = apply_choi(&ch, &rho).unwrap().inner(&plus.density());
        assert!(close(got, r.lower, 1e-6));
    }

    #[test]
    fn optimal_channel_examples() {
        let coh = TheoryDescriptor::coherence(2).unwrap();
        let ch = optimal_distillation_channel(&rho_p(0.5), &coh, &solver()).unwrap();
        assert!(close(ch.achieved, 0.75, 1e-6) && ch.free_check.free);
        let tau = DensityOperator::new(HermitianOperator::from_real_diagonal(&[2.0 / 3.0, 1.0 / 3.0])).unwrap();
        let th = TheoryDescriptor::thermal(tau.clone()).unwrap();
        let ch = optimal_distillation_channel(&tau, &th, &solver()).unwrap();
        assert!(close(ch.achieved, 1.0 / 3.0, 1e-6) && ch.free_check.free);
        let ppt = TheoryDescriptor::ppt(2, 2).unwrap();
        let ch = optimal_distillation_channel(&PureStateVector::maximally_entangled(2, 2).density(), &ppt, &solver()).unwrap();
        assert!(close(ch.achieved, 1.0, 1e-6) && ch.free_check.free && ch.free_check.sampled);
    }

    #[test]
    fn free_channels_do_not_increase_g() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let coh = TheoryDescriptor::coherence(2).unwrap();
        let ch = optimal_distillation_channel(&rho_p(0.7), &coh, &solver()).unwrap().choi;
        for _ in 0..5 {
            let rho = random_density(2, &mut rng);
            let out = apply_choi(&ch, &rho).unwrap();
            for k in [1.5, 2.0] {
                let a = g_value(&out, k, &coh, &solver()).unwrap().value;
                let b = g_value(&rho, k, &coh, &solver()).unwrap().value;
                assert!(a <= b + 1e-6);
            }
        }
    }

    #[test]
    fn exact_distillation_examples() {
        let coh = TheoryDescriptor::coherence(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let full = random_density(2, &mut rng);
        let r = exact_distillation_possible(&full, &coh, &solver()).unwrap();
        assert!(!r.possible && r.witness.is_some());
        let r = exact_distillation_possible(&PureStateVector::uniform(2).density(), &coh, &solver()).unwrap();
        assert!(r.possible && close(r.max_overlap, 0.5, 1e-7));
        let r = exact_distillation_possible(&DensityOperator::basis_state(4, 1), &asym2q(), &solver()).unwrap();
        assert!(!r.possible);
    }

    #[test]
    fn yield_examples() {
        let tau = DensityOperator::new(HermitianOperator::from_real_diagonal(&[0.6, 0.4])).unwrap();
        let th = TheoryDescriptor::thermal(tau.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let rho = random_density(2, &mut rng);
        let y = yield_bounds(&rho, 0.1, &th, &solver()).unwrap();
        let dh = crate::monotones::d_h(&rho, &tau, 0.1, &solver()).unwrap().to_f64();
        assert!(close(y.upper_log_r.to_f64(), dh, 1e-7) && close(y.lower_log_r.to_f64(), dh, 1e-7));
        let coh = TheoryDescriptor::coherence(3).unwrap();
        let y = yield_bounds(&PureStateVector::uniform(3).density(), 0.0, &coh, &solver()).unwrap();
        assert!(close(y.upper_log_r.to_f64(), 3f64.log2(), 1e-6) && close(y.lower_log_r.to_f64(), 3f64.log2(), 1e-6));
        let coh2 = TheoryDescriptor::coherence(2).unwrap();
        let y = yield_bounds(&rho_p(0.9), 0.05, &coh2, &solver()).unwrap();
        let f = fidelity_max_golden(&rho_p(0.9), &coh2, &solver()).unwrap();
        assert_eq!(y.lower_log_r.to_f64() >= 1.0 - 1e-6, f.lower >= 0.95 - 1e-6);
        assert!(yield_bounds(&rho, 1.0, &th, &solver()).is_err());
    }

    #[test]
    fn interconversion_examples() {
        let coh = TheoryDescriptor::coherence(2).unwrap();
        let minus = PureStateVector::from_real(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]).unwrap();
        let ic = interconversion_channels(&minus.density(), &coh, &solver()).unwrap();
        let plus = PureStateVector::uniform(2);
        let back = apply_choi(&ic.dilute, &plus.density()).unwrap();
        assert!(close(back.inner(&minus.density()), 1.0, 1e-6));
        assert!(close(ic.distill.achieved, 1.0, 1e-6) && ic.dilute_check.free);

        let ppt = TheoryDescriptor::ppt(2, 2).unwrap();
        let psi = PureStateVector::from_real(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]).unwrap();
        let ic = interconversion_channels(&psi.density(), &ppt, &solver()).unwrap();
        let back = apply_choi(&ic.dilute, &PureStateVector::maximally_entangled(2, 2).density()).unwrap();
        assert!(close(back.inner(&psi.density()), 1.0, 1e-6) && close(ic.distill.achieved, 1.0, 1e-6));
        assert!(ic.dilute_check.free);

        assert!(matches!(interconversion_channels(&rho_p(0.5), &coh, &solver()), Err(Error::Precondition(_))));
    }

    #[test]
    fn gauge_examples() {
        let coh2 = TheoryDescriptor::coherence(2).unwrap();
        let plus = PureStateVector::uniform(2);
        assert!(close(pure_g_decomposition(&plus, 2.0, &coh2, &solver()).unwrap().objective, 1.0, 1e-6));
        let g = pure_g_decomposition(&plus, 4.0, &coh2, &solver()).unwrap();
        assert!(close(g.objective, FRAC_1_SQRT_2, 1e-6) && close(g.gamma_x, 2f64.sqrt(), 1e-5));
        let g = pure_g_decomposition(&PureStateVector::basis(2, 0), 4.0, &coh2, &solver()).unwrap();
        assert!(close(g.objective, 0.5, 1e-6));
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        for d in [2, 3] {
            let coh = TheoryDescriptor::coherence(d).unwrap();
            let psi = random_pure(d, &mut rng);
            let g = pure_g_decomposition(&psi, 2.0, &coh, &solver()).unwrap();
            let sum: Vec<C64> = g.x.iter().zip(&g.y).map(|(a, b)| a + b).collect();
            assert!(sum.iter().zip(psi.amplitudes().iter()).all(|(a, b)| (a - b).norm_sqr().sqrt() < 1e-8));
            let gv = g_value(&psi.density(), 2.0, &coh, &solver()).unwrap().value;
            assert!(close(g.objective * g.objective, gv, 1e-5));
        }
        assert!(pure_g_decomposition(&plus, 2.0, &thermal(&[0.5, 0.5]), &solver()).is_err());
    }

    #[test]
    fn gme_examples() {
        for d in [2, 3] {
            let v = gme_values(&PureStateVector::ghz(d, 3), &[d, d, d]).unwrap();
            assert_eq!(v.per_cut.len(), 3);
            for c in &v.per_cut {
                assert!(close(c.r_min, d as f64, 1e-9) && close(c.r_max, d as f64, 1e-9));
            }
            assert!(v.golden_chain && close(v.combined_r_min, d as f64, 1e-9));
        }
        let s = 1.0 / 3f64.sqrt();
        let w = PureStateVector::from_real(&[0.0, s, s, 0.0, s, 0.0, 0.0, 0.0]).unwrap();
        let v = gme_values(&w, &[2, 2, 2]).unwrap();
        let want_max = 1.0 + 2.0 * 2f64.sqrt() / 3.0;
        for c in &v.per_cut {
            assert!(close(c.r_min, 1.5, 1e-9) && close(c.r_max, want_max, 1e-9));
        }
        assert!(!v.golden_chain);
        assert!(gme_values(&w, &[2, 3]).is_err());
    }

    #[test]
    fn party_permutation_matches_direct_schmidt() {
        // Cut {1} | {0, 2} of |0>|ψ>|0> keeps ψ's single-qubit Schmidt structure.
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        let a = random_pure(2, &mut rng);
        let b = random_pure(4, &mut rng);
        // b on parties (0, 2) and a on party 1: amplitude index i0 i1 i2.
        let mut amps = CVector::zeros(8);
        for i0 in 0..2 {
            for i1 in 0..2 {
                for i2 in 0..2 {
                    amps[i0 * 4 + i1 * 2 + i2] = b.amplitudes()[i0 * 2 + i2] * a.amplitudes()[i1];
                }
            }
        }
        let psi = PureStateVector::new(amps).unwrap();
        let v = gme_values(&psi, &[2, 2, 2]).unwrap();
        let middle = v.per_cut.iter().find(|c| c.parties == [1]).unwrap();
        assert!(close(middle.r_min, 1.0, 1e-9) && close(middle.r_max, 1.0, 1e-9));
        let direct = schmidt(&b, (2, 2)).unwrap().coefficients;
        let first = v.per_cut.iter().find(|c| c.parties == [0]).unwrap();
        assert!(close(first.schmidt[0], direct[0], 1e-9));
    }

    #[test]
    fn gme_matches_ppt_mixture_on_ghz_family() {
        let t = TheoryDescriptor::ppt_mixture(vec![2, 2, 2]).unwrap();
        for theta in [0.3, 0.6, FRAC_PI_4] {
            let mut amps = CVector::zeros(8);
            amps[0] = c(theta.cos(), 0.0);
            amps[7] = c(theta.sin(), 0.0);
            let psi = PureStateVector::new(amps).unwrap();
            let v = gme_values(&psi, &[2, 2, 2]).unwrap();
            let rmin = r_min(&psi.density(), &t, &solver()).unwrap().value.to_f64();
            assert!(close(rmin, v.combined_r_min, 1e-5), "{rmin} vs {}", v.combined_r_min);
        }
    }

}

//! Small dense conic programs in primal standard form
//!
//! ```text
//! minimize / maximize  c'x   subject to  A x = b,   x ∈ K
//! ```
//!
//! where `K` is a product of real symmetric PSD cones (stored as scaled
//! lower-triangle vectors), nonnegative orthants and free spaces. Complex
//! Hermitian variables are handled one level up in [`model`].

mod ipm;
pub mod model;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub use ipm::InteriorPoint;

/// One block of the variable vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// Real symmetric `n x n` PSD matrix, `n(n+1)/2` coordinates.
    Psd(usize),
    Nonneg(usize),
    Free(usize),
}

impl Cone {
    /// Number of scalar coordinates.
    pub fn len(&self) -> usize {
        match *self {
            Cone::Psd(n) => n * (n + 1) / 2,
            Cone::Nonneg(n) | Cone::Free(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Barrier degree (contribution to the complementarity normalization).
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Psd(n) | Cone::Nonneg(n) => n,
            Cone::Free(_) => 0,
        }
    }
}

/// Position of entry `(r, col)` with `r >= col` in the scaled lower-triangle
/// vectorization of an `n x n` symmetric matrix. Off-diagonal coordinates
/// carry a factor `sqrt(2)` so that the Euclidean inner product of two
/// vectors equals the trace inner product of the matrices.
pub fn svec_index(n: usize, r: usize, col: usize) -> usize {
    let (r, col) = if r >= col { (r, col) } else { (col, r) };
    col * n - col * col.saturating_sub(1) / 2 + (r - col)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Sparse linear equality `sum_j coeffs[j].1 * x[coeffs[j].0] = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub blocks: Vec<Cone>,
    /// Sparse objective coefficients over the flat variable vector.
    pub objective: Vec<(usize, f64)>,
    pub equalities: Vec<Equality>,
    pub sense: Sense,
}

impl ConicProblem {
    pub fn new(sense: Sense) -> Self {
        Self { blocks: Vec::new(), objective: Vec::new(), equalities: Vec::new(), sense }
    }

    /// Appends a block and returns the offset of its first coordinate.
    pub fn add_block(&mut self, cone: Cone) -> usize {
        let offset = self.num_vars();
        self.blocks.push(cone);
        offset
    }

    pub fn num_vars(&self) -> usize {
        self.blocks.iter().map(Cone::len).sum()
    }

    pub fn block_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut acc = 0;
        for b in &self.blocks {
            out.push(acc);
            acc += b.len();
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::MalformedProblem("no variable blocks".into()));
        }
        let n = self.num_vars();
        let check = |idx: usize, v: f64| -> Result<()> {
            if idx >= n {
                return Err(Error::MalformedProblem(format!("coefficient index {idx} beyond {n} variables")));
            }
            if !v.is_finite() {
                return Err(Error::MalformedProblem("non-finite coefficient".into()));
            }
            Ok(())
        };
        for &(i, v) in &self.objective {
            check(i, v)?;
        }
        for eq in &self.equalities {
            if !eq.rhs.is_finite() {
                return Err(Error::MalformedProblem("non-finite right-hand side".into()));
            }
            for &(i, v) in &eq.coeffs {
                check(i, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Flat primal vector (all blocks concatenated).
    pub x: Vec<f64>,
    /// Equality multipliers, signed for the original sense (dual objective `b'y`).
    pub y: Vec<f64>,
    /// Dual slack for each primal coordinate.
    pub z: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal_objective - dual_objective|`.
    pub gap: f64,
    /// `gap / (1 + |primal_objective| + |dual_objective|)`.
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// Improving ray: a Farkas vector `y` (Infeasible) or a primal ray `x` (Unbounded).
    pub certificate: Option<Vec<f64>>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Objective value, or a solver error if the status is not optimal.
    pub fn value(&self) -> Result<f64> {
        if self.is_optimal() {
            Ok(self.primal_objective)
        } else {
            Err(Error::Solver(self.status))
        }
    }
}

/// Interchangeable conic solver backend.
pub trait ConicSolver: Sync {
    fn solve(&self, problem: &ConicProblem) -> Result<ConicSolution>;

    /// Target accuracy (relative gap and residuals).
    fn tolerance(&self) -> f64;
}

/// Solves with the built-in interior-point method.
pub fn solve(problem: &ConicProblem, tol: f64, max_iters: usize) -> Result<ConicSolution> {
    InteriorPoint { tol, max_iters }.solve(problem)
}

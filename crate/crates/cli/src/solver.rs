//! Interior-point solver that logs the outcome of every solve.

use std::sync::Mutex;

use resbench_core::conic::{ConicProblem, ConicSolution, ConicSolver, InteriorPoint, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveLog {
    pub status: SolveStatus,
    pub relative_gap: f64,
}

pub struct RecordingSolver {
    inner: InteriorPoint,
    log: Mutex<Vec<SolveLog>>,
}

impl RecordingSolver {
    pub fn new(tol: f64) -> Self {
        Self { inner: InteriorPoint { tol, ..InteriorPoint::default() }, log: Mutex::new(Vec::new()) }
    }

    pub fn take_log(&self) -> Vec<SolveLog> {
        std::mem::take(&mut *self.log.lock().expect("solver log poisoned"))
    }

    /// Moves the log of `other` into this one.
    pub fn absorb(&self, other: &RecordingSolver) {
        let moved = other.take_log();
        self.log.lock().expect("solver log poisoned").extend(moved);
    }

    /// Largest relative gap among optimal solves, and the number of solves.
    pub fn worst_gap(&self) -> (f64, usize) {
        let log = self.log.lock().expect("solver log poisoned");
        let worst = log.iter().filter(|s| s.status == SolveStatus::Optimal).map(|s| s.relative_gap).fold(0.0, f64::max);
        (worst, log.len())
    }
}

impl ConicSolver for RecordingSolver {
    fn solve(&self, problem: &ConicProblem) -> resbench_core::Result<ConicSolution> {
        let sol = self.inner.solve(problem)?;
        self.log.lock().expect("solver log poisoned").push(SolveLog { status: sol.status, relative_gap: sol.relative_gap });
        Ok(sol)
    }

    fn tolerance(&self) -> f64 {
        self.inner.tol
    }
}

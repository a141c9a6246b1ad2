//! Primal-dual interior-point solver for the canonical form.
//!
//! One solver covers the whole surface: LPs (`Q = 0`), strictly convex QPs,
//! and everything PSD in between, with equality rows kept explicitly (their
//! multipliers are free). The method is the standard predictor-corrector
//! scheme: at each iterate the complementarity system is linearized, an
//! affine-scaling step sets the centering weight, and a corrected Newton step
//! is taken after a symmetric indefinite factorization of the reduced KKT
//! matrix. Runs are deterministic: a fixed starting point, no randomization,
//! and identical inputs produce bitwise-identical results.

mod ipm;
mod linsys;

use nalgebra::DVector;

use crate::model::CanonicalQp;

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SolveStatus {
    /// Converged: scaled KKT residuals below tolerance.
    Optimal,
    /// Dual iterates diverged; no feasible point exists (or feasibility is
    /// beyond numerical reach).
    PrimalInfeasible,
    /// Primal iterates diverged with improving objective.
    Unbounded,
    /// Ran out of iterations (or hit a numerical breakdown) before any of the
    /// above; the returned iterate is the best available.
    IterationLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::PrimalInfeasible => "PrimalInfeasible",
            SolveStatus::Unbounded => "Unbounded",
            SolveStatus::IterationLimit => "IterationLimit",
        })
    }
}

/// Scaled residual summary at the returned iterate.
///
/// `primal` is the worst constraint violation over `1 + |rhs|` norms, `dual`
/// the stationarity residual over `1 + |c|` norms, and `complementarity` the
/// mean inequality product over `1 + |objective|`. [`SolveStatus::Optimal`]
/// means all three are at most the requested tolerance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KktSummary {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktSummary {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity)
    }
}

/// Result of a solve: primal point, multipliers, and diagnostics.
///
/// `objective` is the stored (minimization-form) value at `x`; use
/// [`CanonicalQp::display_objective`] to report it in the declared sense.
/// Inequality multipliers satisfy `lambda >= -1e-9`; equality multipliers
/// `nu` are free, and for compiled dispatch cases `nu` at a balance row is
/// the bus price. On non-`Optimal` statuses the fields hold the last iterate
/// and are diagnostic only.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub nu: DVector<f64>,
    pub status: SolveStatus,
    pub objective: f64,
    pub kkt: KktSummary,
    pub iterations: usize,
    /// Present only when a numerical breakdown cut the run short.
    pub note: Option<String>,
}

/// Solver knobs. `Default` gives tolerance `1e-8` and 200 iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Convergence tolerance on the scaled KKT residuals; must lie in
    /// `(0, 1e-2]`.
    pub tolerance: f64,
    /// Iteration cap; must be at least 1.
    pub max_iterations: usize,
    /// Iterate-norm threshold for declaring divergence (unboundedness when
    /// the objective is improving, infeasibility when the duals blow up).
    pub divergence_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-8,
            max_iterations: 200,
            divergence_threshold: 1e10,
        }
    }
}

impl SolverOptions {
    /// Default options at a caller-chosen tolerance.
    pub fn with_tolerance(tolerance: f64) -> Self {
        SolverOptions {
            tolerance,
            ..SolverOptions::default()
        }
    }

    fn validate(&self) {
        assert!(
            self.tolerance > 0.0 && self.tolerance <= 1e-2,
            "solver tolerance must lie in (0, 1e-2], got {}",
            self.tolerance
        );
        assert!(self.max_iterations >= 1, "max_iterations must be >= 1");
        assert!(
            self.divergence_threshold > 1.0,
            "divergence threshold must exceed 1"
        );
    }
}

/// Solve a canonical program.
///
/// Never errors: infeasibility, unboundedness, and iteration exhaustion are
/// reported through [`Solution::status`]. Panics only on option values that
/// violate their documented ranges (a caller bug, not an input property).
pub fn solve(qp: &CanonicalQp, options: &SolverOptions) -> Solution {
    options.validate();
    ipm::run(qp, options)
}

//! Independent checks on claimed solutions: KKT residuals, brute-force
//! oracles, finite-difference price verification, and structural comparison
//! of optimality conditions between a program and its capped variant.
//!
//! The oracles deliberately share no code with the solver. The vertex oracle
//! enumerates candidate active sets; the grid oracle samples the box. Both
//! are exponential-in-small-sizes tools for cross-checking, not for
//! production solves.

mod compare;
mod kkt;
mod oracle;
mod sensitivity;

pub use compare::{compare_kkt, ConditionChange, KktComparison};
pub use kkt::{kkt_residuals, ConditionResidual, KktReport, DEFAULT_KKT_TOL};
pub use oracle::{grid_oracle, vertex_oracle, GridSolution};
pub use sensitivity::{sensitivity_check, SensitivityReport, DEFAULT_STEP};

use thiserror::Error;

use crate::solver::SolveStatus;

/// Errors from the verification tools.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("problem exceeds the oracle budget: {what}")]
    BudgetExceeded { what: String },
    #[error("this oracle requires a linear objective; largest |Q| entry is {max_abs_q:.3e}")]
    NotLinear { max_abs_q: f64 },
    #[error("the LP is unbounded below (improving ray at an optimal vertex)")]
    UnboundedLp,
    #[error("no feasible point exists")]
    Infeasible,
    #[error("no grid point is feasible")]
    NoFeasibleGridPoint,
    #[error("base solve ended {status}, not Optimal")]
    BaseNotOptimal { status: SolveStatus },
    #[error("perturbed solve ({side} step) ended {status}, not Optimal")]
    PerturbedNotOptimal {
        side: &'static str,
        status: SolveStatus,
    },
    #[error("row {label:?} not found")]
    UnknownRow { label: String },
    #[error("solution dimensions do not match the program ({what})")]
    ShapeMismatch { what: String },
    #[error("not an original/capped pair: {reason}")]
    NotARelaxationPair { reason: String },
}

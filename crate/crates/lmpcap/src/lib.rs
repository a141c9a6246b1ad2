//! Economic dispatch and linearized power flow as convex quadratic programs,
//! with explicit dual construction and hard caps on marginal prices.
//!
//! Everything runs through one canonical minimization form
//!
//! ```text
//!     minimize   1/2 x'Qx + c'x
//!     subject to Ax <= b          (multipliers lambda >= 0)
//!                Gx  = h          (multipliers nu, free)
//! ```
//!
//! built either directly ([`model::build_qp`]) or by compiling a dispatch case
//! ([`model::compile_dispatch`]). Bus balance rows are oriented so that the
//! equality dual `nu` of a balance row *is* the locational marginal price at
//! that bus, which makes "cap the price at m" a constraint on a dual variable.
//! [`pricecap::apply_caps`] realizes such a cap in the primal by introducing a
//! priced slack `alpha` on the capped row; [`solver`] is a primal-dual
//! interior-point method that returns primal and dual values together; and
//! [`verify`] checks any claimed solution against the KKT conditions and
//! against brute-force oracles that share no code with the solver.

pub mod dualize;
pub mod model;
pub mod pricecap;
pub mod solver;
pub mod verify;

pub use model::{build_qp, compile_dispatch, load_case, parse_case, write_case};
pub use model::{CanonicalQp, DispatchCase, ModelError, RowMap, RowRef, Sense};
pub use solver::{solve, Solution, SolveStatus, SolverOptions};

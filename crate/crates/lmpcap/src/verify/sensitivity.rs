use nalgebra::DVector;
use serde::Serialize;

use super::VerifyError;
use crate::model::{build_qp, CanonicalQp, RowMap, RowRef};
use crate::solver::{solve, SolverOptions};

/// Default right-hand-side step for [`sensitivity_check`].
pub const DEFAULT_STEP: f64 = 1e-5;

/// Step used for the one retry after a degeneracy flag.
const RETRY_STEP: f64 = 1e-4;

/// A row is counted active when its slack is this close to zero (relative).
const ACTIVE_TOL: f64 = 1e-6;

/// A multiplier checked against what the objective actually does when the
/// row's right-hand side moves.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    /// Label of the perturbed row.
    pub row: String,
    /// The multiplier reported at the base optimum.
    pub analytic: f64,
    /// Central-difference estimate `-(f(+e) - f(-e)) / 2e` of the same
    /// quantity, in the stored minimization objective.
    pub fd_estimate: f64,
    /// The step the reported estimate used.
    pub epsilon: f64,
    /// The active set changed between the two perturbed solves, so the
    /// multiplier may genuinely be one-sided there.
    pub degenerate: bool,
    /// A degeneracy flag at the requested step triggered one retry at a
    /// larger step; the reported figures are the retry's.
    pub retried: bool,
}

impl SensitivityReport {
    /// |analytic - estimate|, relative to the analytic value.
    pub fn relative_gap(&self) -> f64 {
        (self.analytic - self.fd_estimate).abs() / (1.0 + self.analytic.abs())
    }
}

/// Check one multiplier of `qp` against a central finite difference of the
/// optimal objective in that row's right-hand side.
///
/// Solves the program at `rhs`, `rhs + epsilon`, and `rhs - epsilon`; the
/// multiplier of a row is minus the derivative of the optimal objective in
/// its right-hand side, so the three solves give an estimate that needs no
/// dual machinery at all. When the perturbed solves disagree on the active
/// set the estimate straddles a kink and is flagged degenerate (and retried
/// once at a coarser step, where ties are less likely to sit inside the
/// bracket). Errors: [`VerifyError::UnknownRow`],
/// [`VerifyError::BaseNotOptimal`], [`VerifyError::PerturbedNotOptimal`].
pub fn sensitivity_check(
    qp: &CanonicalQp,
    rows: &RowMap,
    label: &str,
    epsilon: f64,
    options: &SolverOptions,
) -> Result<SensitivityReport, VerifyError> {
    assert!(
        epsilon.is_finite() && epsilon > 0.0,
        "step must be positive"
    );
    let row = rows.lookup(label).ok_or_else(|| VerifyError::UnknownRow {
        label: label.to_string(),
    })?;

    let base = solve(qp, options);
    if base.status != crate::solver::SolveStatus::Optimal {
        return Err(VerifyError::BaseNotOptimal {
            status: base.status,
        });
    }
    let analytic = match row {
        RowRef::Ineq(i) => base.lambda[i],
        RowRef::Eq(i) => base.nu[i],
    };

    let (fd, degenerate) = central_difference(qp, row, epsilon, options)?;
    if !degenerate || epsilon == RETRY_STEP {
        return Ok(SensitivityReport {
            row: label.to_string(),
            analytic,
            fd_estimate: fd,
            epsilon,
            degenerate,
            retried: false,
        });
    }
    let (fd, degenerate) = central_difference(qp, row, RETRY_STEP, options)?;
    Ok(SensitivityReport {
        row: label.to_string(),
        analytic,
        fd_estimate: fd,
        epsilon: RETRY_STEP,
        degenerate,
        retried: true,
    })
}

fn central_difference(
    qp: &CanonicalQp,
    row: RowRef,
    epsilon: f64,
    options: &SolverOptions,
) -> Result<(f64, bool), VerifyError> {
    let plus = solve_perturbed(qp, row, epsilon, "+", options)?;
    let minus = solve_perturbed(qp, row, -epsilon, "-", options)?;
    let fd = -(plus.0 - minus.0) / (2.0 * epsilon);
    Ok((fd, plus.1 != minus.1))
}

// Returns the perturbed optimal objective and the active-set signature.
fn solve_perturbed(
    qp: &CanonicalQp,
    row: RowRef,
    delta: f64,
    side: &'static str,
    options: &SolverOptions,
) -> Result<(f64, Vec<bool>), VerifyError> {
    let shifted = shift_rhs(qp, row, delta);
    let sol = solve(&shifted, options);
    if sol.status != crate::solver::SolveStatus::Optimal {
        return Err(VerifyError::PerturbedNotOptimal {
            side,
            status: sol.status,
        });
    }
    let slack = shifted.ineq_slack(&sol.x);
    let active = (0..shifted.num_ineq())
        .map(|i| slack[i] <= ACTIVE_TOL * (1.0 + shifted.b()[i].abs()))
        .collect();
    Ok((sol.objective, active))
}

fn shift_rhs(qp: &CanonicalQp, row: RowRef, delta: f64) -> CanonicalQp {
    let mut b = qp.b().clone();
    let mut h: DVector<f64> = qp.h().clone();
    match row {
        RowRef::Ineq(i) => b[i] += delta,
        RowRef::Eq(i) => h[i] += delta,
    }
    build_qp(
        qp.q().clone(),
        qp.c().clone(),
        qp.a().clone(),
        b,
        qp.g().clone(),
        h,
        qp.sense(),
    )
    .expect("shifting a right-hand side preserves validity")
}

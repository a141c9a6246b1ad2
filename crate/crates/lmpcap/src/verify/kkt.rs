use nalgebra::DVector;
use serde::Serialize;

use super::VerifyError;
use crate::model::{CanonicalQp, RowMap};
use crate::solver::{KktSummary, Solution};

/// Default acceptance threshold for [`kkt_residuals`]. The solver targets
/// residuals two orders of magnitude tighter, so a verified solution clears
/// this with headroom.
pub const DEFAULT_KKT_TOL: f64 = 1e-6;

/// One first-order optimality condition and its raw (unscaled) residual.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionResidual {
    pub condition: String,
    pub value: f64,
}

/// Labeled first-order optimality audit of a claimed solution.
///
/// `conditions` carries every scalar condition with its raw residual;
/// `summary` aggregates them with the same relative scaling the solver uses
/// for its own convergence test, and `pass` is `summary.max() <= tol`.
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    pub conditions: Vec<ConditionResidual>,
    pub summary: KktSummary,
    pub tol: f64,
    pub pass: bool,
}

impl KktReport {
    /// Raw residual of a named condition, if present.
    pub fn residual(&self, condition: &str) -> Option<f64> {
        self.conditions
            .iter()
            .find(|c| c.condition == condition)
            .map(|c| c.value)
    }

    /// The condition with the largest absolute raw residual.
    pub fn worst(&self) -> Option<&ConditionResidual> {
        self.conditions
            .iter()
            .max_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
    }
}

/// Recompute every first-order optimality condition of `sol` against `qp`
/// from scratch.
///
/// This audits a claimed solution without trusting the figures stored in it:
/// stationarity per variable, primal feasibility per row, multiplier signs,
/// and one complementarity product per inequality row. Row and variable
/// names come from `rows` when given, otherwise positional names are
/// synthesized. Residuals in `conditions` are raw; the `summary` is
/// relative-scaled. Fails with [`VerifyError::ShapeMismatch`] when the
/// solution or row map does not match the program's dimensions.
pub fn kkt_residuals(
    qp: &CanonicalQp,
    rows: Option<&RowMap>,
    sol: &Solution,
    tol: f64,
) -> Result<KktReport, VerifyError> {
    let (n, mi, me) = (qp.n(), qp.num_ineq(), qp.num_eq());
    check_len("solution x", sol.x.len(), n)?;
    check_len("solution lambda", sol.lambda.len(), mi)?;
    check_len("solution nu", sol.nu.len(), me)?;
    let synthetic;
    let rows = match rows {
        Some(r) => {
            check_len("row map variables", r.var_labels().len(), n)?;
            check_len("row map inequality rows", r.ineq_labels().len(), mi)?;
            check_len("row map equality rows", r.eq_labels().len(), me)?;
            r
        }
        None => {
            synthetic = RowMap::synthetic(n, mi, me);
            &synthetic
        }
    };

    let mut conditions = Vec::with_capacity(n + 2 * mi + me + mi);

    // Gradient of the Lagrangian, one entry per variable.
    let mut stat: DVector<f64> = qp.q() * &sol.x + qp.c();
    if mi > 0 {
        stat += qp.a().transpose() * &sol.lambda;
    }
    if me > 0 {
        stat += qp.g().transpose() * &sol.nu;
    }
    for (j, label) in rows.var_labels().iter().enumerate() {
        conditions.push(ConditionResidual {
            condition: format!("stationarity[{label}]"),
            value: stat[j],
        });
    }

    let slack = qp.ineq_slack(&sol.x);
    for (i, label) in rows.ineq_labels().iter().enumerate() {
        conditions.push(ConditionResidual {
            condition: format!("primal_ineq[{label}]"),
            value: (-slack[i]).max(0.0),
        });
    }
    let resid = qp.eq_residual(&sol.x);
    for (i, label) in rows.eq_labels().iter().enumerate() {
        conditions.push(ConditionResidual {
            condition: format!("primal_eq[{label}]"),
            value: resid[i],
        });
    }
    for (i, label) in rows.ineq_labels().iter().enumerate() {
        conditions.push(ConditionResidual {
            condition: format!("dual_feas[{label}]"),
            value: (-sol.lambda[i]).max(0.0),
        });
    }
    for (i, label) in rows.ineq_labels().iter().enumerate() {
        conditions.push(ConditionResidual {
            condition: format!("complementarity[{label}]"),
            value: sol.lambda[i] * slack[i],
        });
    }

    // Aggregate with the same relative scalings the solver converges on, so
    // "solver says optimal" and "audit passes" measure the same thing.
    let objective = qp.objective(&sol.x);
    let primal = qp.max_violation(&sol.x);
    let dual = if n == 0 {
        0.0
    } else {
        let worst_stat = stat.abs().max();
        let worst_sign = (0..mi).fold(0.0f64, |m, i| m.max((-sol.lambda[i]).max(0.0)));
        worst_stat.max(worst_sign) / (1.0 + qp.c().abs().max())
    };
    let complementarity = if mi == 0 {
        0.0
    } else {
        let total: f64 = (0..mi).map(|i| (sol.lambda[i] * slack[i]).abs()).sum();
        (total / mi as f64) / (1.0 + objective.abs())
    };
    let summary = KktSummary {
        primal,
        dual,
        complementarity,
    };
    Ok(KktReport {
        conditions,
        summary,
        tol,
        pass: summary.max() <= tol,
    })
}

fn check_len(what: &str, found: usize, expected: usize) -> Result<(), VerifyError> {
    if found != expected {
        return Err(VerifyError::ShapeMismatch {
            what: format!("{what}: expected {expected}, found {found}"),
        });
    }
    Ok(())
}

use serde::Serialize;

use super::kkt::{kkt_residuals, DEFAULT_KKT_TOL};
use super::VerifyError;
use crate::model::{CanonicalQp, RowMap};
use crate::solver::Solution;

/// One structural difference between the optimality conditions of a program
/// and its capped counterpart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ConditionChange {
    /// The primal condition of `row` gained the relief variable `alpha`.
    RowGainsAlpha { row: String, alpha: String },
    /// A new stationarity condition for `alpha` pins the multiplier of
    /// `row` at or below `cap`.
    AlphaStationarity {
        alpha: String,
        row: String,
        cap: f64,
    },
}

/// Where the optimality conditions of two programs agree and where they
/// differ.
#[derive(Debug, Clone, Serialize)]
pub struct KktComparison {
    /// Structural changes, two per cap, in relief-variable order.
    pub changes: Vec<ConditionChange>,
    /// Number of conditions with identical structure in both programs.
    pub identical: usize,
    /// Human-readable account of each cap's effect at the two solutions.
    pub details: Vec<String>,
}

/// Explain how the optimality conditions of `qp_b` differ from those of
/// `qp_a`, where `qp_b` must be `qp_a` with relief variables added (the
/// shape [`crate::pricecap::apply_caps`] produces).
///
/// Every original condition is classified: stationarity of original
/// variables and untouched rows carry over unchanged (counted in
/// `identical`), each capped row's primal condition gains its relief
/// variable, and each relief variable brings one new stationarity condition
/// encoding the ceiling. The two solutions are audited along the way and
/// quoted in `details`. Fails with [`VerifyError::NotARelaxationPair`] when
/// `qp_b` does not extend `qp_a` this way, or
/// [`VerifyError::ShapeMismatch`] when a solution does not fit its program.
pub fn compare_kkt(
    qp_a: &CanonicalQp,
    rows_a: Option<&RowMap>,
    sol_a: &Solution,
    qp_b: &CanonicalQp,
    rows_b: Option<&RowMap>,
    sol_b: &Solution,
) -> Result<KktComparison, VerifyError> {
    // Audits double as shape checks.
    let report_a = kkt_residuals(qp_a, rows_a, sol_a, DEFAULT_KKT_TOL)?;
    let report_b = kkt_residuals(qp_b, rows_b, sol_b, DEFAULT_KKT_TOL)?;

    let (n_a, mi_a, me_a) = (qp_a.n(), qp_a.num_ineq(), qp_a.num_eq());
    let (n_b, mi_b, me_b) = (qp_b.n(), qp_b.num_ineq(), qp_b.num_eq());
    let fail = |reason: &str| VerifyError::NotARelaxationPair {
        reason: reason.to_string(),
    };

    if qp_a.sense() != qp_b.sense() {
        return Err(fail("the programs declare different senses"));
    }
    if n_b < n_a {
        return Err(fail("the second program has fewer variables"));
    }
    let k = n_b - n_a;
    if me_b != me_a {
        return Err(fail("the equality row count changed"));
    }
    if mi_b != mi_a + k {
        return Err(fail(
            "each relief variable needs exactly one added sign row",
        ));
    }
    for i in 0..me_a {
        if qp_b.h()[i] != qp_a.h()[i] {
            return Err(fail("equality right-hand sides differ"));
        }
    }
    for i in 0..mi_a {
        if qp_b.b()[i] != qp_a.b()[i] {
            return Err(fail("inequality right-hand sides differ"));
        }
    }
    for j in 0..n_a {
        if qp_b.c()[j] != qp_a.c()[j] {
            return Err(fail("objective coefficients of original variables differ"));
        }
    }
    for i in 0..n_b {
        for j in 0..n_b {
            let expect = if i < n_a && j < n_a { qp_a.q()[(i, j)] } else { 0.0 };
            if qp_b.q()[(i, j)] != expect {
                return Err(fail("quadratic terms differ"));
            }
        }
    }
    for i in 0..mi_a {
        for j in 0..n_a {
            if qp_b.a()[(i, j)] != qp_a.a()[(i, j)] {
                return Err(fail("original inequality rows differ"));
            }
        }
    }
    for i in 0..me_a {
        for j in 0..n_a {
            if qp_b.g()[(i, j)] != qp_a.g()[(i, j)] {
                return Err(fail("original equality rows differ"));
            }
        }
    }

    let synthetic_b;
    let rows_b = match rows_b {
        Some(r) => r,
        None => {
            synthetic_b = RowMap::synthetic(n_b, mi_b, me_b);
            &synthetic_b
        }
    };

    let mut changes = Vec::with_capacity(2 * k);
    let mut details = Vec::new();
    let mut used_sign_rows = vec![false; k];
    for col in n_a..n_b {
        // The one original row this relief variable feeds.
        let mut capped: Option<(bool, usize)> = None; // (is_eq, index)
        for i in 0..me_a {
            let v = qp_b.g()[(i, col)];
            if v == -1.0 && capped.is_none() {
                capped = Some((true, i));
            } else if v != 0.0 {
                return Err(fail("a relief variable touches several equality rows"));
            }
        }
        for i in 0..mi_a {
            let v = qp_b.a()[(i, col)];
            if v == -1.0 && capped.is_none() {
                capped = Some((false, i));
            } else if v != 0.0 {
                return Err(fail("a relief variable touches several original rows"));
            }
        }
        let (is_eq, row_idx) =
            capped.ok_or_else(|| fail("a new variable relieves no original row"))?;

        // Its sign row among the added inequality rows.
        let mut sign_row = None;
        for i in mi_a..mi_b {
            let v = qp_b.a()[(i, col)];
            if v == -1.0 && sign_row.is_none() {
                sign_row = Some(i);
            } else if v != 0.0 {
                return Err(fail("a relief variable appears in several added rows"));
            }
        }
        let sign_row = sign_row.ok_or_else(|| fail("a relief variable has no sign row"))?;
        if qp_b.b()[sign_row] != 0.0 {
            return Err(fail("a sign row has a nonzero right-hand side"));
        }
        for j in 0..n_b {
            if j != col && qp_b.a()[(sign_row, j)] != 0.0 {
                return Err(fail("a sign row involves more than its own variable"));
            }
        }
        if used_sign_rows[sign_row - mi_a] {
            return Err(fail("two relief variables share a sign row"));
        }
        used_sign_rows[sign_row - mi_a] = true;

        let alpha = rows_b.var_labels()[col].clone();
        let row_label = if is_eq {
            rows_b.eq_labels()[row_idx].clone()
        } else {
            rows_b.ineq_labels()[row_idx].clone()
        };
        let cap = qp_b.c()[col];
        changes.push(ConditionChange::RowGainsAlpha {
            row: row_label.clone(),
            alpha: alpha.clone(),
        });
        changes.push(ConditionChange::AlphaStationarity {
            alpha: alpha.clone(),
            row: row_label.clone(),
            cap,
        });

        let dual_before = if is_eq {
            sol_a.nu[row_idx]
        } else {
            sol_a.lambda[row_idx]
        };
        let dual_after = if is_eq {
            sol_b.nu[row_idx]
        } else {
            sol_b.lambda[row_idx]
        };
        let relief = sol_b.x[col];
        details.push(format!(
            "{row_label}: multiplier {dual_before} -> {dual_after} under cap {cap}; \
             relief {alpha} = {relief}"
        ));
    }

    // Conditions whose structure carries over: stationarity of original
    // variables plus every original row, minus the rows that gained relief.
    let identical = n_a + mi_a + me_a - k;
    details.push(format!(
        "{identical} conditions unchanged; audits: first {}, second {}",
        if report_a.pass { "pass" } else { "FAIL" },
        if report_b.pass { "pass" } else { "FAIL" },
    ));
    Ok(KktComparison {
        changes,
        identical,
        details,
    })
}

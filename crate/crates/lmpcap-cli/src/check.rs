//! `check`: solve a case and audit the result — recomputed optimality
//! residuals, finite-difference verification of every bus price, and, when
//! caps are active, the structural diff of the optimality conditions.

use std::path::Path;
use std::process::ExitCode;

use anyhow::Result;
use lmpcap::model::BusCap;
use lmpcap::pricecap::{apply_caps, bus_caps};
use lmpcap::verify::{
    compare_kkt, kkt_residuals, sensitivity_check, ConditionChange, KktComparison, KktReport,
    SensitivityReport, DEFAULT_KKT_TOL, DEFAULT_STEP,
};
use lmpcap::{solve, SolveStatus, SolverOptions};
use serde::Serialize;

use crate::render::{load_and_compile, merge_caps, sig6, status_line};

/// One audited multiplier: the sensitivity report plus this command's
/// verdict on it. Degenerate rows are reported but never fail the check.
#[derive(Serialize)]
struct SensitivityRow {
    #[serde(flatten)]
    report: SensitivityReport,
    ok: bool,
}

#[derive(Serialize)]
struct CheckRecord {
    case: String,
    status: SolveStatus,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kkt: Option<KktReport>,
    sensitivity: Vec<SensitivityRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<KktComparison>,
    pass: bool,
}

/// A multiplier passes when the difference quotient reproduces it to
/// within `max(1e-4, 1e-3 |multiplier|)`.
fn sensitivity_ok(report: &SensitivityReport) -> bool {
    if report.degenerate {
        return true;
    }
    let tol = 1e-4_f64.max(1e-3 * report.analytic.abs());
    (report.analytic - report.fd_estimate).abs() <= tol
}

pub fn run(path: &Path, flags: &[BusCap], opts: &SolverOptions, json: bool) -> Result<ExitCode> {
    let (case, compiled) = load_and_compile(path)?;
    let merged = merge_caps(&case, flags);

    let base = solve(&compiled.qp, opts);
    let capped = if merged.is_empty() {
        None
    } else {
        let spec = bus_caps(&merged, &compiled.rows)?;
        Some(apply_caps(&compiled.qp, &compiled.rows, &spec)?)
    };
    let audited = match &capped {
        Some(c) => solve(&c.qp, opts),
        None => base.clone(),
    };

    let mut record = CheckRecord {
        case: path.display().to_string(),
        status: audited.status,
        iterations: audited.iterations,
        note: audited.note.clone(),
        kkt: None,
        sensitivity: Vec::new(),
        comparison: None,
        pass: false,
    };

    // A solve that never reached an optimum has nothing to audit.
    let solves_ok = base.status == SolveStatus::Optimal && audited.status == SolveStatus::Optimal;
    if solves_ok {
        let (qp, rows) = match &capped {
            Some(c) => (&c.qp, &c.rows),
            None => (&compiled.qp, &compiled.rows),
        };
        let kkt = kkt_residuals(qp, Some(rows), &audited, DEFAULT_KKT_TOL)?;
        for (_, row) in rows.balance_rows() {
            let label = rows.eq_labels()[*row].clone();
            let report = sensitivity_check(qp, rows, &label, DEFAULT_STEP, opts)?;
            let ok = sensitivity_ok(&report);
            record.sensitivity.push(SensitivityRow { report, ok });
        }
        if let Some(c) = &capped {
            record.comparison = Some(compare_kkt(
                &compiled.qp,
                Some(&compiled.rows),
                &base,
                &c.qp,
                Some(&c.rows),
                &audited,
            )?);
        }
        record.pass = kkt.pass && record.sensitivity.iter().all(|s| s.ok);
        record.kkt = Some(kkt);
    }

    if json {
        println!("{}", serde_json::to_string_pretty(&record)?);
    } else {
        print!("{}", render_tables(&record));
    }
    Ok(if record.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn render_tables(record: &CheckRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!("case    {}\n", record.case));
    out.push_str(&format!(
        "status  {}\n",
        status_line(record.status, record.iterations)
    ));
    if let Some(note) = &record.note {
        out.push_str(&format!("note    {note}\n"));
    }
    if let Some(kkt) = &record.kkt {
        let worst = kkt
            .worst()
            .map(|c| format!("worst residual {} at {}", sig6(c.value), c.condition))
            .unwrap_or_else(|| "no conditions".to_string());
        out.push_str(&format!(
            "kkt     {} ({worst}, tol {})\n",
            if kkt.pass { "pass" } else { "FAIL" },
            sig6(kkt.tol)
        ));
    }
    if !record.sensitivity.is_empty() {
        let mut t =
            crate::render::Table::new(vec!["row", "multiplier", "estimate", "step", "verdict"]);
        for s in &record.sensitivity {
            let verdict = if s.report.degenerate {
                "degenerate"
            } else if s.ok {
                "ok"
            } else {
                "MISMATCH"
            };
            t.row(vec![
                s.report.row.clone(),
                sig6(s.report.analytic),
                sig6(s.report.fd_estimate),
                sig6(s.report.epsilon),
                verdict.to_string(),
            ]);
        }
        out.push('\n');
        out.push_str(&t.render());
    }
    if let Some(cmp) = &record.comparison {
        out.push_str(&format!(
            "\ncap conditions: {} unchanged, {} changed\n",
            cmp.identical,
            cmp.changes.len()
        ));
        for change in &cmp.changes {
            let line = match change {
                ConditionChange::RowGainsAlpha { row, alpha } => {
                    format!("{row} gains relief variable {alpha}")
                }
                ConditionChange::AlphaStationarity { alpha, row, cap } => {
                    format!("stationarity of {alpha} holds the {row} multiplier at or below {cap}")
                }
            };
            out.push_str(&format!("  {line}\n"));
        }
        for detail in &cmp.details {
            out.push_str(&format!("  {detail}\n"));
        }
    }
    out.push_str(&format!(
        "\ncheck   {}\n",
        if record.pass { "pass" } else { "FAIL" }
    ));
    out
}

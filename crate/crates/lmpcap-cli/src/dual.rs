//! `dual`: print a case's dual program, and optionally solve both sides.

use std::path::Path;
use std::process::ExitCode;

use anyhow::Result;
use lmpcap::dualize::{build_dual_qp, lp_dual, solve_dual_qp};
use lmpcap::{solve, SolveStatus, SolverOptions};
use serde::Serialize;

use crate::render::{load_and_compile, sig6, status_line};

#[derive(Serialize)]
struct Term {
    var: String,
    coeff: f64,
}

#[derive(Serialize)]
struct DualRow {
    label: String,
    terms: Vec<Term>,
    rhs: f64,
}

#[derive(Serialize)]
struct DualVar {
    label: String,
    cost: f64,
}

/// Result of solving both sides, populated as far as the statuses allow.
#[derive(Serialize)]
struct SolveOut {
    dual_status: SolveStatus,
    dual_iterations: usize,
    primal_status: SolveStatus,
    primal_iterations: usize,
    /// The bound the dual optimum certifies on the primal minimization
    /// optimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_optimum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    primal_optimum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
}

#[derive(Serialize)]
struct LpDualRecord {
    case: String,
    form: &'static str,
    variables: Vec<DualVar>,
    stationarity: Vec<DualRow>,
    /// One sign row per lambda keeps it nonnegative.
    sign_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    solution: Option<SolveOut>,
}

#[derive(Serialize)]
struct ExplicitDualRecord {
    case: String,
    form: &'static str,
    constant: f64,
    multipliers: Vec<DualVar>,
    p: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solution: Option<SolveOut>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    recovered: Vec<RecoveredVar>,
}

#[derive(Serialize)]
struct RecoveredVar {
    var: String,
    value: f64,
}

pub fn run(
    path: &Path,
    lp_form: bool,
    solve_it: bool,
    opts: &SolverOptions,
    json: bool,
) -> Result<ExitCode> {
    let (case, compiled) = load_and_compile(path)?;
    if !case.caps.is_empty() {
        eprintln!("note: the dual is built for the uncapped program; case caps are ignored");
    }
    if lp_form {
        run_lp(path, &compiled, solve_it, opts, json)
    } else {
        run_explicit(path, &compiled, solve_it, opts, json)
    }
}

fn run_lp(
    path: &Path,
    compiled: &lmpcap::model::Compiled,
    solve_it: bool,
    opts: &SolverOptions,
    json: bool,
) -> Result<ExitCode> {
    let dual = lp_dual(&compiled.qp, Some(&compiled.rows))?;
    let dqp = &dual.qp;
    let drows = &dual.rows;
    let variables: Vec<DualVar> = drows
        .var_labels()
        .iter()
        .zip(dqp.c().iter())
        .map(|(label, cost)| DualVar {
            label: label.clone(),
            cost: *cost,
        })
        .collect();
    let stationarity: Vec<DualRow> = (0..dqp.num_eq())
        .map(|r| DualRow {
            label: drows.eq_labels()[r].clone(),
            terms: (0..dqp.n())
                .filter(|&j| dqp.g()[(r, j)] != 0.0)
                .map(|j| Term {
                    var: drows.var_labels()[j].clone(),
                    coeff: dqp.g()[(r, j)],
                })
                .collect(),
            rhs: dqp.h()[r],
        })
        .collect();
    let solution = if solve_it {
        // The linear dual's minimization optimum is the negative of the
        // primal's, so the certified bound re-negates it.
        Some(solve_pair(dqp, &compiled.qp, opts, |v| -v))
    } else {
        None
    };
    let record = LpDualRecord {
        case: path.display().to_string(),
        form: "lp",
        variables,
        stationarity,
        sign_rows: dqp.num_ineq(),
        solution,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&record)?);
    } else {
        let mut out = String::new();
        out.push_str(&format!("case  {}\n", record.case));
        out.push_str("form  linear dual (canonical minimization form)\n\n");
        let mut t = crate::render::Table::new(vec!["variable", "cost"]);
        for v in &record.variables {
            t.row(vec![v.label.clone(), sig6(v.cost)]);
        }
        out.push_str(&t.render());
        out.push('\n');
        let mut t = crate::render::Table::new(vec!["row", "equation"]);
        for row in &record.stationarity {
            t.row(vec![row.label.clone(), equation(&row.terms, row.rhs)]);
        }
        out.push_str(&t.render());
        out.push_str(&format!(
            "\nsign rows  {} (each lambda stays nonnegative)\n",
            record.sign_rows
        ));
        if let Some(s) = &record.solution {
            out.push_str(&render_solve(s));
        }
        print!("{out}");
    }
    Ok(pair_exit(&record.solution))
}

fn run_explicit(
    path: &Path,
    compiled: &lmpcap::model::Compiled,
    solve_it: bool,
    opts: &SolverOptions,
    json: bool,
) -> Result<ExitCode> {
    let dual = build_dual_qp(&compiled.qp)?;
    let labels = dual.folded_row_labels(&compiled.rows);
    let multipliers: Vec<DualVar> = labels
        .iter()
        .zip(dual.t().iter())
        .map(|(label, t)| DualVar {
            label: label.clone(),
            cost: *t,
        })
        .collect();
    let k = dual.num_multipliers();
    let p: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dual.p()[(i, j)]).collect())
        .collect();
    let mut recovered = Vec::new();
    let solution = if solve_it {
        let dsol = solve_dual_qp(&dual, opts);
        let psol = solve(&compiled.qp, opts);
        if dsol.status == SolveStatus::Optimal {
            let x = dual.recover_primal(&dsol.x)?;
            for (j, label) in compiled.rows.var_labels().iter().enumerate() {
                recovered.push(RecoveredVar {
                    var: label.clone(),
                    value: x[j],
                });
            }
        }
        Some(pair_out(&dsol, &psol, |v| dual.primal_bound(v)))
    } else {
        None
    };
    let record = ExplicitDualRecord {
        case: path.display().to_string(),
        form: "explicit",
        constant: dual.constant(),
        multipliers,
        p,
        solution,
        recovered,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&record)?);
    } else {
        let mut out = String::new();
        out.push_str(&format!("case      {}\n", record.case));
        out.push_str("form      closed-form dual of a strictly convex program\n");
        out.push_str(&format!("constant  {}\n\n", sig6(record.constant)));
        let mut t = crate::render::Table::new(vec!["multiplier", "t"]);
        for m in &record.multipliers {
            t.row(vec![m.label.clone(), sig6(m.cost)]);
        }
        out.push_str(&t.render());
        out.push_str(&format!("\nP ({k} x {k})\n"));
        out.push_str(&matrix_block(&record.p));
        if !record.recovered.is_empty() {
            let mut t = crate::render::Table::new(vec!["recovered variable", "value"]);
            for r in &record.recovered {
                t.row(vec![r.var.clone(), sig6(r.value)]);
            }
            out.push('\n');
            out.push_str(&t.render());
        }
        if let Some(s) = &record.solution {
            out.push_str(&render_solve(s));
        }
        print!("{out}");
    }
    Ok(pair_exit(&record.solution))
}

/// Solve the dual program and the primal program; `bound` maps the dual's
/// minimization optimum to the bound it certifies on the primal's.
fn solve_pair(
    dual_qp: &lmpcap::CanonicalQp,
    primal_qp: &lmpcap::CanonicalQp,
    opts: &SolverOptions,
    bound: impl Fn(f64) -> f64,
) -> SolveOut {
    let dsol = solve(dual_qp, opts);
    let psol = solve(primal_qp, opts);
    pair_out(&dsol, &psol, bound)
}

fn pair_out(
    dsol: &lmpcap::Solution,
    psol: &lmpcap::Solution,
    bound: impl Fn(f64) -> f64,
) -> SolveOut {
    let dual_optimum = (dsol.status == SolveStatus::Optimal).then(|| bound(dsol.objective));
    let primal_optimum = (psol.status == SolveStatus::Optimal).then_some(psol.objective);
    let gap = match (dual_optimum, primal_optimum) {
        (Some(d), Some(p)) => Some(p - d),
        _ => None,
    };
    SolveOut {
        dual_status: dsol.status,
        dual_iterations: dsol.iterations,
        primal_status: psol.status,
        primal_iterations: psol.iterations,
        dual_optimum,
        primal_optimum,
        gap,
    }
}

fn render_solve(s: &SolveOut) -> String {
    let mut pairs: Vec<(String, String)> = vec![
        (
            "dual status".into(),
            status_line(s.dual_status, s.dual_iterations),
        ),
        (
            "primal status".into(),
            status_line(s.primal_status, s.primal_iterations),
        ),
    ];
    if let Some(d) = s.dual_optimum {
        pairs.push(("dual optimum".into(), sig6(d)));
    }
    if let Some(p) = s.primal_optimum {
        pairs.push(("primal optimum".into(), sig6(p)));
    }
    if let Some(g) = s.gap {
        pairs.push(("duality gap".into(), sig6(g)));
    }
    let width = pairs.iter().map(|(key, _)| key.len()).max().unwrap_or(0);
    let mut out = String::from("\n");
    for (key, value) in &pairs {
        out.push_str(&format!("{key:<width$}  {value}\n"));
    }
    out
}

/// 2 if a requested solve ended anywhere but optimal on either side.
fn pair_exit(solution: &Option<SolveOut>) -> ExitCode {
    match solution {
        Some(s) if s.dual_status != SolveStatus::Optimal || s.primal_status != SolveStatus::Optimal => {
            ExitCode::from(2)
        }
        _ => ExitCode::SUCCESS,
    }
}

/// A signed linear expression like `-1*lambda[x] + 2*nu[y] = 3`.
fn equation(terms: &[Term], rhs: f64) -> String {
    if terms.is_empty() {
        return format!("0 = {}", sig6(rhs));
    }
    let mut s = String::new();
    for (k, term) in terms.iter().enumerate() {
        if k == 0 {
            s.push_str(&format!("{}*{}", sig6(term.coeff), term.var));
        } else if term.coeff < 0.0 {
            s.push_str(&format!(" - {}*{}", sig6(-term.coeff), term.var));
        } else {
            s.push_str(&format!(" + {}*{}", sig6(term.coeff), term.var));
        }
    }
    format!("{s} = {}", sig6(rhs))
}

/// Aligned numeric matrix rows.
fn matrix_block(rows: &[Vec<f64>]) -> String {
    let rendered: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.iter().map(|v| sig6(*v)).collect())
        .collect();
    let cols = rendered.first().map_or(0, Vec::len);
    let mut widths = vec![0usize; cols];
    for row in &rendered {
        for (j, cell) in row.iter().enumerate() {
            widths[j] = widths[j].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &rendered {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, cell)| format!("{cell:>width$}", width = widths[j]))
            .collect();
        out.push_str(&format!("  {}\n", line.join("  ")));
    }
    out
}

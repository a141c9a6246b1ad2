//! `solve`: dispatch a case, report prices, dispatch, and cap outcomes.

use std::path::Path;
use std::process::ExitCode;

use anyhow::Result;
use lmpcap::model::BusCap;
use lmpcap::pricecap::{apply_caps, bus_caps, interpret};
use lmpcap::solver::KktSummary;
use lmpcap::{solve, Sense, SolveStatus, SolverOptions};
use serde::Serialize;

use crate::render::{exit_for, load_and_compile, merge_caps, sig6, status_line};

/// Everything one solve reports. Filled for optimal solves; other statuses
/// carry only `status`, `iterations`, and `note`.
#[derive(Serialize)]
struct OutputRecord {
    case: String,
    status: SolveStatus,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    sense: &'static str,
    /// Optimum in the case's declared sense; includes the priced relief
    /// term when caps are active.
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    /// Value of the dispatch alone, relief term removed.
    #[serde(skip_serializing_if = "Option::is_none")]
    physical_objective: Option<f64>,
    /// Minimization-form cost booked by relief variables.
    #[serde(skip_serializing_if = "Option::is_none")]
    relief_cost: Option<f64>,
    buses: Vec<BusOut>,
    generators: Vec<GenOut>,
    loads: Vec<LoadOut>,
    fixed_loads: Vec<FixedOut>,
    caps: Vec<CapOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kkt: Option<KktSummary>,
}

#[derive(Serialize)]
struct BusOut {
    id: String,
    lmp: f64,
}

#[derive(Serialize)]
struct GenOut {
    id: String,
    bus: String,
    dispatch: f64,
}

#[derive(Serialize)]
struct LoadOut {
    id: String,
    bus: String,
    consumption: f64,
}

#[derive(Serialize)]
struct FixedOut {
    id: String,
    bus: String,
    demand: f64,
}

#[derive(Serialize)]
struct CapOut {
    bus: String,
    price: f64,
    lmp: f64,
    alpha: f64,
    binding: bool,
}

pub fn run(path: &Path, flags: &[BusCap], opts: &SolverOptions, json: bool) -> Result<ExitCode> {
    let (case, compiled) = load_and_compile(path)?;
    let merged = merge_caps(&case, flags);
    let sense = match case.sense {
        Sense::Maximize => "maximize",
        Sense::Minimize => "minimize",
    };
    let mut record = OutputRecord {
        case: path.display().to_string(),
        status: SolveStatus::IterationLimit,
        iterations: 0,
        note: None,
        sense,
        objective: None,
        physical_objective: None,
        relief_cost: None,
        buses: Vec::new(),
        generators: Vec::new(),
        loads: Vec::new(),
        fixed_loads: Vec::new(),
        caps: Vec::new(),
        kkt: None,
    };

    let capped = if merged.is_empty() {
        None
    } else {
        let spec = bus_caps(&merged, &compiled.rows)?;
        Some(apply_caps(&compiled.qp, &compiled.rows, &spec)?)
    };
    let sol = match &capped {
        Some(c) => solve(&c.qp, opts),
        None => solve(&compiled.qp, opts),
    };
    record.status = sol.status;
    record.iterations = sol.iterations;
    record.note = sol.note.clone();

    if sol.status == SolveStatus::Optimal {
        record.kkt = Some(sol.kkt);
        record.objective = Some(compiled.qp.display_objective(sol.objective));
        if let Some(c) = &capped {
            let relief = c.relief_cost(&sol.x);
            record.relief_cost = Some(relief);
            record.physical_objective = Some(compiled.qp.display_objective(sol.objective - relief));
            let report = interpret(c, &sol)?;
            for (cap, outcome) in merged.iter().zip(&report.outcomes) {
                record.caps.push(CapOut {
                    bus: cap.bus.clone(),
                    price: outcome.price,
                    lmp: outcome.dual,
                    alpha: outcome.alpha,
                    binding: outcome.binding,
                });
            }
        }
        for bus in &case.buses {
            let row = compiled
                .rows
                .balance_row(&bus.id)
                .expect("every bus has a balance row");
            record.buses.push(BusOut {
                id: bus.id.clone(),
                lmp: sol.nu[row],
            });
        }
        for g in &case.generators {
            let col = compiled
                .rows
                .var_index(&format!("pg[{}]", g.id))
                .expect("every generator has a variable");
            record.generators.push(GenOut {
                id: g.id.clone(),
                bus: g.bus.clone(),
                dispatch: sol.x[col],
            });
        }
        for l in &case.loads {
            let col = compiled
                .rows
                .var_index(&format!("pl[{}]", l.id))
                .expect("every flexible load has a variable");
            record.loads.push(LoadOut {
                id: l.id.clone(),
                bus: l.bus.clone(),
                consumption: sol.x[col],
            });
        }
        for f in &case.fixed_loads {
            record.fixed_loads.push(FixedOut {
                id: f.id.clone(),
                bus: f.bus.clone(),
                demand: f.demand,
            });
        }
    }

    if json {
        println!("{}", serde_json::to_string_pretty(&record)?);
    } else {
        print!("{}", render_tables(&record));
    }
    Ok(exit_for(sol.status))
}

/// Objective labels in the declared sense: welfare for maximization
/// cases, cost for minimization cases.
fn objective_label(record: &OutputRecord) -> &'static str {
    if record.sense == "maximize" {
        "welfare"
    } else {
        "cost"
    }
}

fn render_tables(record: &OutputRecord) -> String {
    let mut head: Vec<(String, String)> = vec![
        ("case".into(), record.case.clone()),
        (
            "status".into(),
            status_line(record.status, record.iterations),
        ),
    ];
    if let Some(note) = &record.note {
        head.push(("note".into(), note.clone()));
    }
    let label = objective_label(record);
    if record.caps.is_empty() {
        if let Some(obj) = record.objective {
            head.push((label.into(), sig6(obj)));
        }
    } else {
        // The relief term is a construct, not a physical payment, so both
        // views are shown.
        if let Some(obj) = record.objective {
            head.push((format!("virtual {label}"), sig6(obj)));
        }
        if let Some(phys) = record.physical_objective {
            head.push((format!("physical {label}"), sig6(phys)));
        }
        if let Some(relief) = record.relief_cost {
            head.push(("relief cost".into(), sig6(relief)));
        }
    }
    let width = head.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in &head {
        out.push_str(format!("{k:<width$}  {v}\n").trim_end());
        out.push('\n');
    }

    if !record.buses.is_empty() {
        let mut t = crate::render::Table::new(vec!["bus", "lmp"]);
        for b in &record.buses {
            t.row(vec![b.id.clone(), sig6(b.lmp)]);
        }
        out.push('\n');
        out.push_str(&t.render());
    }
    if !record.generators.is_empty() {
        let mut t = crate::render::Table::new(vec!["generator", "bus", "dispatch"]);
        for g in &record.generators {
            t.row(vec![g.id.clone(), g.bus.clone(), sig6(g.dispatch)]);
        }
        out.push('\n');
        out.push_str(&t.render());
    }
    if !record.loads.is_empty() {
        let mut t = crate::render::Table::new(vec!["load", "bus", "consumption"]);
        for l in &record.loads {
            t.row(vec![l.id.clone(), l.bus.clone(), sig6(l.consumption)]);
        }
        out.push('\n');
        out.push_str(&t.render());
    }
    if !record.fixed_loads.is_empty() {
        let mut t = crate::render::Table::new(vec!["fixed load", "bus", "demand"]);
        for f in &record.fixed_loads {
            t.row(vec![f.id.clone(), f.bus.clone(), sig6(f.demand)]);
        }
        out.push('\n');
        out.push_str(&t.render());
    }
    if !record.caps.is_empty() {
        let mut t = crate::render::Table::new(vec!["cap", "price", "lmp", "alpha", "binding"]);
        for c in &record.caps {
            t.row(vec![
                c.bus.clone(),
                sig6(c.price),
                sig6(c.lmp),
                sig6(c.alpha),
                if c.binding { "yes" } else { "no" }.to_string(),
            ]);
        }
        out.push('\n');
        out.push_str(&t.render());
    }
    out
}

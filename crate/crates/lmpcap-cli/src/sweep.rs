//! `sweep`: re-solve a case under evenly spaced cap values on one bus and
//! emit one CSV row per value.

use std::path::Path;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Result};
use lmpcap::model::{BusCap, Compiled, DispatchCase};
use lmpcap::pricecap::{apply_caps, bus_caps};
use lmpcap::{solve, SolveStatus, SolverOptions};
use serde::Serialize;

use crate::render::{load_and_compile, merge_caps};

#[derive(Serialize)]
struct SweepRow {
    m: f64,
    lmp: Option<f64>,
    alpha: Option<f64>,
    objective: Option<f64>,
    status: SolveStatus,
}

impl SweepRow {
    /// `m,lmp,alpha,objective,status` with full-precision numbers; a
    /// non-optimal row keeps its numeric fields empty.
    fn csv(&self) -> String {
        let field = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{}",
            self.m,
            field(self.lmp),
            field(self.alpha),
            field(self.objective),
            self.status
        )
    }
}

/// Solve the case with the swept bus capped at `m`, file caps on other
/// buses left in force.
fn eval_point(
    case: &DispatchCase,
    compiled: &Compiled,
    bus: &str,
    m: f64,
    opts: &SolverOptions,
) -> Result<SweepRow> {
    let merged = merge_caps(
        case,
        &[BusCap {
            bus: bus.to_string(),
            price: m,
        }],
    );
    let spec = bus_caps(&merged, &compiled.rows)?;
    let capped = apply_caps(&compiled.qp, &compiled.rows, &spec)?;
    let sol = solve(&capped.qp, opts);
    if sol.status != SolveStatus::Optimal {
        return Ok(SweepRow {
            m,
            lmp: None,
            alpha: None,
            objective: None,
            status: sol.status,
        });
    }
    let row = compiled
        .rows
        .balance_row(bus)
        .expect("existence checked before the sweep");
    let label = &compiled.rows.eq_labels()[row];
    let relief = capped
        .resolved
        .iter()
        .find(|rc| rc.label == *label)
        .expect("the swept bus is capped");
    Ok(SweepRow {
        m,
        lmp: Some(sol.nu[row]),
        alpha: Some(sol.x[relief.alpha_var]),
        objective: Some(compiled.qp.display_objective(sol.objective)),
        status: sol.status,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    path: &Path,
    bus: &str,
    from: f64,
    to: f64,
    steps: usize,
    opts: &SolverOptions,
    jobs: usize,
    json: bool,
) -> Result<ExitCode> {
    if steps < 2 {
        bail!("--steps must be at least 2, got {steps}");
    }
    if !(from.is_finite() && to.is_finite()) {
        bail!("--from and --to must be finite");
    }
    if from >= to {
        bail!("--from must be below --to, got {from} >= {to}");
    }
    let (case, compiled) = load_and_compile(path)?;
    if compiled.rows.balance_row(bus).is_none() {
        bail!("bus {bus:?} is not in the case");
    }
    let points: Vec<f64> = (0..steps)
        .map(|i| from + (i as f64) * (to - from) / ((steps - 1) as f64))
        .collect();

    let workers = jobs.min(steps);
    let rows: Vec<SweepRow> = if workers <= 1 {
        let mut rows = Vec::with_capacity(steps);
        for &m in &points {
            rows.push(eval_point(&case, &compiled, bus, m, opts)?);
        }
        rows
    } else {
        // Workers pull the next unevaluated point; results land by index,
        // so output order never depends on scheduling.
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<SweepRow>>>> =
            Mutex::new((0..steps).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= steps {
                        break;
                    }
                    let row = eval_point(&case, &compiled, bus, points[i], opts);
                    slots.lock().expect("no poisoned workers")[i] = Some(row);
                });
            }
        });
        let collected = slots.into_inner().expect("no poisoned workers");
        collected
            .into_iter()
            .map(|slot| slot.expect("every point evaluated"))
            .collect::<Result<Vec<_>>>()?
    };

    let all_optimal = rows.iter().all(|r| r.status == SolveStatus::Optimal);
    if json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else {
        println!("m,lmp,alpha,objective,status");
        for row in &rows {
            println!("{}", row.csv());
        }
    }
    Ok(if all_optimal {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

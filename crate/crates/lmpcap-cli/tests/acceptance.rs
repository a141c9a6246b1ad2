//! Release gate for the whole workspace: one check per shipping claim,
//! each printing a PASS/FAIL line so a run reads as a checklist. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lmpcap::dualize::{build_dual_qp, solve_dual_qp};
use lmpcap::model::{
    Bus, BusCap, DispatchCase, FixedLoad, FlexibleLoad, Generator, Line, RowMap,
};
use lmpcap::pricecap::{apply_caps, bus_caps};
use lmpcap::verify::{
    compare_kkt, kkt_residuals, sensitivity_check, vertex_oracle, ConditionChange,
};
use lmpcap::{
    build_qp, compile_dispatch, load_case, solve, CanonicalQp, Sense, SolveStatus, SolverOptions,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !($cond) {
            return Err(format!($($arg)+));
        }
    };
}

fn case_path(name: &str) -> String {
    format!("{}/../../cases/{name}", env!("CARGO_MANIFEST_DIR"))
}

// --- random program families -------------------------------------------

/// An inequality-only linear program with a unique, known answer: `n` rows
/// active with strictly positive multipliers, `extra` rows slack by at
/// least 0.1, and `c` chosen so stationarity holds exactly.
fn known_optimum_lp(
    rng: &mut ChaCha8Rng,
    n: usize,
    extra: usize,
) -> (CanonicalQp, DVector<f64>, DVector<f64>) {
    let m = n + extra;
    loop {
        let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let smallest = a
            .rows(0, n)
            .into_owned()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(f64::INFINITY, |acc, v| acc.min(*v));
        if smallest < 0.25 {
            continue;
        }
        let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let lam0 = DVector::from_fn(m, |i, _| {
            if i < n {
                rng.gen_range(0.05..1.0)
            } else {
                0.0
            }
        });
        let mut b = &a * &x0;
        for i in n..m {
            b[i] += rng.gen_range(0.1..2.0);
        }
        let c = -(a.transpose() * &lam0);
        let qp = CanonicalQp::linear(
            c,
            a,
            b,
            DMatrix::zeros(0, n),
            DVector::zeros(0),
            Sense::Minimize,
        )
        .expect("generated program is valid");
        return (qp, x0, lam0);
    }
}

/// A strictly convex program guaranteed feasible at a sampled point.
fn strictly_convex_qp(rng: &mut ChaCha8Rng, n: usize, mi: usize, me: usize) -> CanonicalQp {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = m.transpose() * &m + DMatrix::identity(n, n);
    let a = DMatrix::from_fn(mi, n, |_, _| rng.gen_range(-1.0..1.0));
    let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let b = &a * &x0 + DVector::from_fn(mi, |_, _| rng.gen_range(0.01..2.0));
    let g = DMatrix::from_fn(me, n, |_, _| rng.gen_range(-1.0..1.0));
    let h = &g * &x0;
    let c = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    build_qp(q, c, a, b, g, h, Sense::Minimize).expect("generated program is valid")
}

/// A random chain network that is always feasible (every bus can cover its
/// own fixed demand) and bounded (all variables have finite ranges).
fn random_dispatch(rng: &mut ChaCha8Rng, buses: usize) -> DispatchCase {
    let mut case = DispatchCase::empty();
    for bi in 0..buses {
        case.buses.push(Bus {
            id: format!("b{bi}"),
        });
        case.generators.push(Generator {
            id: format!("g{bi}"),
            bus: format!("b{bi}"),
            a: rng.gen_range(1.0..10.0),
            q: if rng.gen_bool(0.5) {
                rng.gen_range(0.1..1.0)
            } else {
                0.0
            },
            pmin: 0.0,
            pmax: rng.gen_range(3.0..15.0),
        });
        case.loads.push(FlexibleLoad {
            id: format!("l{bi}"),
            bus: format!("b{bi}"),
            benefit: rng.gen_range(5.0..15.0),
            pmin: 0.0,
            pmax: rng.gen_range(1.0..8.0),
        });
        if rng.gen_bool(0.5) {
            case.fixed_loads.push(FixedLoad {
                id: format!("f{bi}"),
                bus: format!("b{bi}"),
                demand: rng.gen_range(0.1..1.0),
            });
        }
        if bi > 0 {
            case.lines.push(Line {
                id: format!("t{bi}"),
                from: format!("b{}", bi - 1),
                to: format!("b{bi}"),
                susceptance: rng.gen_range(0.5..2.0),
                limit: rng.gen_range(1.0..5.0),
            });
        }
    }
    case
}

// --- the criteria -------------------------------------------------------

/// Closed-form dual optima reproduce primal optima across 200 random
/// strictly convex programs, inside ten seconds.
fn strong_duality() -> Result<(), String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let opts = SolverOptions::with_tolerance(1e-10);
    for trial in 0..200 {
        let n = 1 + trial % 6;
        let mi = 1 + trial % 10;
        let me = (trial % 3).min(n - 1);
        let qp = strictly_convex_qp(&mut rng, n, mi, me);
        let psol = solve(&qp, &opts);
        ensure!(
            psol.status == SolveStatus::Optimal,
            "trial {trial}: primal {:?}",
            psol.status
        );
        let dual = build_dual_qp(&qp).map_err(|e| format!("trial {trial}: {e}"))?;
        let dsol = solve_dual_qp(&dual, &opts);
        ensure!(
            dsol.status == SolveStatus::Optimal,
            "trial {trial}: dual {:?}",
            dsol.status
        );
        // Recover the primal optimum from the dual's: negate and subtract
        // the fixed 1/2 c'Q^{-1}c completion term, computed from scratch.
        let chol = qp
            .q()
            .clone()
            .cholesky()
            .ok_or_else(|| format!("trial {trial}: Q not positive definite"))?;
        let completion = 0.5 * qp.c().dot(&chol.solve(qp.c()));
        let via_dual = -dsol.objective - completion;
        let gap = (psol.objective - via_dual).abs();
        ensure!(
            gap <= 1e-6 * (1.0 + psol.objective.abs()),
            "trial {trial}: primal {} vs via-dual {} (gap {gap:.3e})",
            psol.objective,
            via_dual
        );
    }
    let elapsed = start.elapsed();
    ensure!(
        elapsed < Duration::from_secs(10),
        "200 pairs took {elapsed:?}"
    );
    Ok(())
}

/// The argmin reconstructed from dual multipliers matches the directly
/// solved primal point, over the same program family.
fn primal_recovery() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let opts = SolverOptions::with_tolerance(1e-10);
    for trial in 0..200 {
        let n = 1 + trial % 6;
        let mi = 1 + trial % 10;
        let me = (trial % 3).min(n - 1);
        let qp = strictly_convex_qp(&mut rng, n, mi, me);
        let psol = solve(&qp, &opts);
        ensure!(
            psol.status == SolveStatus::Optimal,
            "trial {trial}: primal {:?}",
            psol.status
        );
        let dual = build_dual_qp(&qp).map_err(|e| format!("trial {trial}: {e}"))?;
        let dsol = solve_dual_qp(&dual, &opts);
        ensure!(
            dsol.status == SolveStatus::Optimal,
            "trial {trial}: dual {:?}",
            dsol.status
        );
        let recovered = dual
            .recover_primal(&dsol.x)
            .map_err(|e| format!("trial {trial}: {e}"))?;
        for j in 0..n {
            let err = (recovered[j] - psol.x[j]).abs();
            ensure!(
                err <= 1e-6,
                "trial {trial} x[{j}]: recovered {} vs solved {} (err {err:.3e})",
                recovered[j],
                psol.x[j]
            );
        }
    }
    Ok(())
}

/// The single-bus widget case: uncapped price 5 and welfare 30; capped at
/// 3 the price drops to 3, relief is 10, and the generator shuts off.
/// Solver, enumeration oracle, and the audit all agree.
fn widget_case() -> Result<(), String> {
    let case = load_case(Path::new(&case_path("widget.json"))).map_err(|e| e.to_string())?;
    let compiled = compile_dispatch(&case).map_err(|e| e.to_string())?;
    let opts = SolverOptions::with_tolerance(1e-10);

    let sol = solve(&compiled.qp, &opts);
    ensure!(
        sol.status == SolveStatus::Optimal,
        "uncapped {:?}",
        sol.status
    );
    let row = compiled.rows.balance_row("bus1").ok_or("no balance row")?;
    ensure!(
        (sol.nu[row] - 5.0).abs() <= 1e-7,
        "uncapped price {}",
        sol.nu[row]
    );
    let welfare = compiled.qp.display_objective(sol.objective);
    ensure!((welfare - 30.0).abs() <= 1e-7, "welfare {welfare}");
    let oracle = vertex_oracle(&compiled.qp).map_err(|e| e.to_string())?;
    ensure!(
        (oracle.objective - sol.objective).abs() <= 1e-7,
        "oracle objective {} vs {}",
        oracle.objective,
        sol.objective
    );
    ensure!(
        (oracle.nu[row] - sol.nu[row]).abs() <= 1e-7,
        "oracle price {} vs {}",
        oracle.nu[row],
        sol.nu[row]
    );
    let audit = kkt_residuals(&compiled.qp, Some(&compiled.rows), &sol, 1e-7)
        .map_err(|e| e.to_string())?;
    ensure!(audit.pass, "uncapped audit {:?}", audit.worst());

    let spec = bus_caps(
        &[BusCap {
            bus: "bus1".into(),
            price: 3.0,
        }],
        &compiled.rows,
    )
    .map_err(|e| e.to_string())?;
    let capped = apply_caps(&compiled.qp, &compiled.rows, &spec).map_err(|e| e.to_string())?;
    let csol = solve(&capped.qp, &opts);
    ensure!(
        csol.status == SolveStatus::Optimal,
        "capped {:?}",
        csol.status
    );
    let crow = capped.rows.balance_row("bus1").ok_or("no capped row")?;
    ensure!(
        (csol.nu[crow] - 3.0).abs() <= 1e-7,
        "capped price {}",
        csol.nu[crow]
    );
    let alpha = csol.x[capped.resolved[0].alpha_var];
    ensure!((alpha - 10.0).abs() <= 1e-7, "relief {alpha}");
    let pg = capped.rows.var_index("pg[G1]").ok_or("no pg[G1]")?;
    ensure!(csol.x[pg].abs() <= 1e-7, "generator output {}", csol.x[pg]);
    let coracle = vertex_oracle(&capped.qp).map_err(|e| e.to_string())?;
    ensure!(
        (coracle.objective - csol.objective).abs() <= 1e-7,
        "capped oracle objective {} vs {}",
        coracle.objective,
        csol.objective
    );
    let caudit =
        kkt_residuals(&capped.qp, Some(&capped.rows), &csol, 1e-7).map_err(|e| e.to_string())?;
    ensure!(caudit.pass, "capped audit {:?}", caudit.worst());
    Ok(())
}

/// Across 300 random dispatch cases with one cap each: capping never
/// raises the optimum, the capped multiplier never exceeds the cap, active
/// relief pins the multiplier at the cap, and a cap set above the going
/// price changes nothing.
fn cap_semantics() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    // The objective comparison below has an absolute 1e-9 budget, so these
    // solves run tighter than the default and lean on the solver's final
    // polish for the last digits.
    let opts = SolverOptions::with_tolerance(1e-10);
    let mut done = 0usize;
    let mut attempts = 0usize;
    while done < 300 {
        attempts += 1;
        ensure!(attempts < 1000, "too many degenerate draws");
        let buses = 1 + attempts % 3;
        let mut case = random_dispatch(&mut rng, buses);
        if attempts % 2 == 0 {
            case.sense = Sense::Minimize;
        }
        let compiled = compile_dispatch(&case).map_err(|e| e.to_string())?;
        let base = solve(&compiled.qp, &opts);
        if base.status != SolveStatus::Optimal {
            continue;
        }
        let balance = compiled.rows.balance_rows();
        let (bus, row) = &balance[rng.gen_range(0..balance.len())];
        let dual0 = base.nu[*row];
        let price = dual0 + rng.gen_range(-4.0..4.0);

        let spec = bus_caps(
            &[BusCap {
                bus: bus.clone(),
                price,
            }],
            &compiled.rows,
        )
        .map_err(|e| e.to_string())?;
        let capped = apply_caps(&compiled.qp, &compiled.rows, &spec).map_err(|e| e.to_string())?;
        let csol = solve(&capped.qp, &opts);
        ensure!(
            csol.status == SolveStatus::Optimal,
            "attempt {attempts}: capped solve {:?}",
            csol.status
        );

        ensure!(
            csol.objective <= base.objective + 1e-9,
            "attempt {attempts}: capping raised the optimum {} -> {}",
            base.objective,
            csol.objective
        );
        let crow = capped.rows.balance_row(bus).ok_or("capped row missing")?;
        let cdual = csol.nu[crow];
        ensure!(
            cdual <= price + 1e-6,
            "attempt {attempts}: multiplier {cdual} above cap {price}"
        );
        let alpha = csol.x[capped.resolved[0].alpha_var];
        if alpha > 1e-7 {
            ensure!(
                (cdual - price).abs() <= 1e-6,
                "attempt {attempts}: relief {alpha} active but multiplier {cdual} != cap {price}"
            );
        }
        if price >= dual0 + 1e-6 {
            for j in 0..compiled.qp.n() {
                let drift = (csol.x[j] - base.x[j]).abs();
                ensure!(
                    drift <= 1e-6,
                    "attempt {attempts}: quiet cap moved x[{j}] by {drift:.3e}"
                );
            }
        }
        done += 1;
    }
    Ok(())
}

/// The audit diff between the capped and uncapped widget programs is
/// exactly the two expected condition changes, checked structurally.
fn audit_diff() -> Result<(), String> {
    let case = load_case(Path::new(&case_path("widget.json"))).map_err(|e| e.to_string())?;
    let compiled = compile_dispatch(&case).map_err(|e| e.to_string())?;
    let opts = SolverOptions::with_tolerance(1e-10);
    let base = solve(&compiled.qp, &opts);
    let spec = bus_caps(
        &[BusCap {
            bus: "bus1".into(),
            price: 3.0,
        }],
        &compiled.rows,
    )
    .map_err(|e| e.to_string())?;
    let capped = apply_caps(&compiled.qp, &compiled.rows, &spec).map_err(|e| e.to_string())?;
    let csol = solve(&capped.qp, &opts);
    ensure!(
        base.status == SolveStatus::Optimal && csol.status == SolveStatus::Optimal,
        "solves {:?} / {:?}",
        base.status,
        csol.status
    );
    let cmp = compare_kkt(
        &compiled.qp,
        Some(&compiled.rows),
        &base,
        &capped.qp,
        Some(&capped.rows),
        &csol,
    )
    .map_err(|e| e.to_string())?;
    let golden = vec![
        ConditionChange::RowGainsAlpha {
            row: "balance[bus1]".into(),
            alpha: "alpha[balance[bus1]]".into(),
        },
        ConditionChange::AlphaStationarity {
            alpha: "alpha[balance[bus1]]".into(),
            row: "balance[bus1]".into(),
            cap: 3.0,
        },
    ];
    ensure!(
        cmp.changes == golden,
        "diff {:?}\nexpected {:?}",
        cmp.changes,
        golden
    );
    Ok(())
}

/// Central-difference estimates reproduce reported multipliers on random
/// linear programs, and a binding cap is sensed at exactly the cap price.
fn fd_sensitivity() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let opts = SolverOptions::with_tolerance(1e-10);
    let mut sensed = 0usize;
    let mut degenerate = 0usize;
    for trial in 0..200 {
        let n = 2 + trial % 4;
        let extra = 1 + trial % 4;
        let (qp, _, _) = known_optimum_lp(&mut rng, n, extra);
        let rows = RowMap::synthetic(qp.n(), qp.num_ineq(), 0);
        // One row active at the optimum and one slack row per program.
        for index in [0usize, n] {
            let label = rows.ineq_labels()[index].clone();
            let report = sensitivity_check(&qp, &rows, &label, 1e-5, &opts)
                .map_err(|e| format!("trial {trial} {label}: {e}"))?;
            if report.degenerate {
                degenerate += 1;
                continue;
            }
            sensed += 1;
            let tol = f64::max(1e-4, 1e-3 * report.analytic.abs());
            let err = (report.analytic - report.fd_estimate).abs();
            ensure!(
                err <= tol,
                "trial {trial} {label}: multiplier {} vs estimate {} (err {err:.3e})",
                report.analytic,
                report.fd_estimate
            );
        }
    }
    // Binding caps: the estimated marginal value of demand is the cap.
    let mut capped_trials = 0usize;
    for trial in 0..60 {
        if capped_trials >= 25 {
            break;
        }
        let buses = 1 + trial % 3;
        let case = random_dispatch(&mut rng, buses);
        let compiled = compile_dispatch(&case).map_err(|e| e.to_string())?;
        let base = solve(&compiled.qp, &opts);
        if base.status != SolveStatus::Optimal {
            continue;
        }
        let (bus, price) = compiled
            .rows
            .balance_rows()
            .iter()
            .map(|(id, row)| (id.clone(), base.nu[*row]))
            .fold((String::new(), f64::NEG_INFINITY), |acc, cur| {
                if cur.1 > acc.1 {
                    cur
                } else {
                    acc
                }
            });
        if price < 0.5 {
            continue;
        }
        let cap_price = 0.5 * price;
        let spec = bus_caps(
            &[BusCap {
                bus: bus.clone(),
                price: cap_price,
            }],
            &compiled.rows,
        )
        .map_err(|e| e.to_string())?;
        let capped = apply_caps(&compiled.qp, &compiled.rows, &spec).map_err(|e| e.to_string())?;
        let csol = solve(&capped.qp, &opts);
        if csol.status != SolveStatus::Optimal {
            continue;
        }
        if csol.x[capped.resolved[0].alpha_var] <= 1e-6 {
            continue;
        }
        let crow = capped.rows.balance_row(&bus).ok_or("capped row missing")?;
        let label = capped.rows.eq_labels()[crow].clone();
        let report = sensitivity_check(&capped.qp, &capped.rows, &label, 1e-5, &opts)
            .map_err(|e| format!("cap trial {trial}: {e}"))?;
        if report.degenerate {
            degenerate += 1;
            continue;
        }
        sensed += 1;
        capped_trials += 1;
        let tol = f64::max(1e-4, 1e-3 * cap_price.abs());
        ensure!(
            (report.analytic - cap_price).abs() <= tol,
            "cap trial {trial}: multiplier {} vs cap {cap_price}",
            report.analytic
        );
        ensure!(
            (report.fd_estimate - cap_price).abs() <= tol,
            "cap trial {trial}: estimate {} vs cap {cap_price}",
            report.fd_estimate
        );
    }
    ensure!(
        capped_trials >= 10,
        "only {capped_trials} binding-cap trials materialized"
    );
    let total = sensed + degenerate;
    ensure!(
        sensed * 10 >= total * 9,
        "{degenerate} of {total} rows were degenerate"
    );
    Ok(())
}

/// The solver matches brute-force vertex enumeration on 500 random linear
/// programs, objectives and multipliers both, inside thirty seconds.
fn oracle_agreement() -> Result<(), String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let opts = SolverOptions::with_tolerance(1e-10);
    for trial in 0..500 {
        let n = 2 + trial % 4;
        let extra = 1 + trial % 4;
        let (qp, _, _) = known_optimum_lp(&mut rng, n, extra);
        let sol = solve(&qp, &opts);
        ensure!(
            sol.status == SolveStatus::Optimal,
            "trial {trial}: {:?}",
            sol.status
        );
        let oracle = vertex_oracle(&qp).map_err(|e| format!("trial {trial}: {e}"))?;
        let gap = (sol.objective - oracle.objective).abs();
        ensure!(
            gap <= 1e-7,
            "trial {trial}: objective {} vs oracle {} (gap {gap:.3e})",
            sol.objective,
            oracle.objective
        );
        for i in 0..qp.num_ineq() {
            let err = (sol.lambda[i] - oracle.lambda[i]).abs();
            ensure!(
                err <= 1e-6,
                "trial {trial} row {i}: multiplier {} vs oracle {} (err {err:.3e})",
                sol.lambda[i],
                oracle.lambda[i]
            );
        }
    }
    let elapsed = start.elapsed();
    ensure!(
        elapsed < Duration::from_secs(30),
        "500 programs took {elapsed:?}"
    );
    Ok(())
}

/// The two-bus case: congestion separates prices to 1 and 10 with the line
/// at its 4 MW limit; capping the expensive bus at 6 prices it at 6 with
/// relief 4 and shuts the expensive generator off.
fn congestion_and_relief() -> Result<(), String> {
    let case = load_case(Path::new(&case_path("two_bus.json"))).map_err(|e| e.to_string())?;
    let compiled = compile_dispatch(&case).map_err(|e| e.to_string())?;
    let opts = SolverOptions::with_tolerance(1e-10);
    let sol = solve(&compiled.qp, &opts);
    ensure!(sol.status == SolveStatus::Optimal, "base {:?}", sol.status);
    let row1 = compiled.rows.balance_row("bus1").ok_or("no bus1 row")?;
    let row2 = compiled.rows.balance_row("bus2").ok_or("no bus2 row")?;
    ensure!(
        (sol.nu[row1] - 1.0).abs() <= 1e-7,
        "bus1 price {}",
        sol.nu[row1]
    );
    ensure!(
        (sol.nu[row2] - 10.0).abs() <= 1e-7,
        "bus2 price {}",
        sol.nu[row2]
    );
    let t1 = compiled.rows.var_index("theta[bus1]").ok_or("no theta1")?;
    let t2 = compiled.rows.var_index("theta[bus2]").ok_or("no theta2")?;
    let flow = case.lines[0].susceptance * (sol.x[t1] - sol.x[t2]);
    ensure!((flow - 4.0).abs() <= 1e-7, "line flow {flow}");

    let spec = bus_caps(
        &[BusCap {
            bus: "bus2".into(),
            price: 6.0,
        }],
        &compiled.rows,
    )
    .map_err(|e| e.to_string())?;
    let capped = apply_caps(&compiled.qp, &compiled.rows, &spec).map_err(|e| e.to_string())?;
    let csol = solve(&capped.qp, &opts);
    ensure!(
        csol.status == SolveStatus::Optimal,
        "capped {:?}",
        csol.status
    );
    let crow2 = capped.rows.balance_row("bus2").ok_or("no capped row")?;
    ensure!(
        (csol.nu[crow2] - 6.0).abs() <= 1e-7,
        "capped bus2 price {}",
        csol.nu[crow2]
    );
    let alpha = csol.x[capped.resolved[0].alpha_var];
    ensure!((alpha - 4.0).abs() <= 1e-7, "relief {alpha}");
    let g2 = capped.rows.var_index("pg[G2]").ok_or("no pg[G2]")?;
    ensure!(
        csol.x[g2].abs() <= 1e-7,
        "expensive generator still on: {}",
        csol.x[g2]
    );
    Ok(())
}

/// Three consecutive runs of `solve` (table and JSON) and `sweep` through
/// the shipped binary produce byte-identical output.
fn binary_determinism() -> Result<(), String> {
    let two_bus = case_path("two_bus.json");
    let widget = case_path("widget.json");
    let commands: Vec<Vec<&str>> = vec![
        vec!["solve", &two_bus],
        vec!["solve", &two_bus, "--json"],
        vec![
            "sweep", &widget, "--bus", "bus1", "--from", "0.5", "--to", "7", "--steps", "14",
        ],
        vec![
            "sweep", &widget, "--bus", "bus1", "--from", "0.5", "--to", "7", "--steps", "14",
            "--jobs", "4",
        ],
    ];
    for args in &commands {
        let mut outputs = Vec::new();
        for _ in 0..3 {
            let out = Command::new(env!("CARGO_BIN_EXE_lmpcap"))
                .args(args)
                .output()
                .map_err(|e| e.to_string())?;
            outputs.push(out);
        }
        for run in &outputs[1..] {
            ensure!(
                run.stdout == outputs[0].stdout
                    && run.stderr == outputs[0].stderr
                    && run.status == outputs[0].status,
                "`{} {}` differed between runs",
                env!("CARGO_BIN_EXE_lmpcap"),
                args.join(" ")
            );
        }
        ensure!(
            outputs[0].status.code() == Some(0),
            "`{}` exited {:?}",
            args.join(" "),
            outputs[0].status.code()
        );
    }
    Ok(())
}

// --- harness ------------------------------------------------------------

fn panic_text(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "opaque panic".into())
}

#[test]
fn acceptance_criteria() {
    let criteria: Vec<(&str, fn() -> Result<(), String>)> = vec![
        ("strong duality on strictly convex programs", strong_duality),
        ("dual multipliers recover the primal optimum", primal_recovery),
        ("widget case prices, caps, and relief", widget_case),
        ("caps never improve the optimum and bind at the cap", cap_semantics),
        ("capped-versus-uncapped audit diff is exactly two conditions", audit_diff),
        ("finite differences reproduce reported multipliers", fd_sensitivity),
        ("solver agrees with vertex enumeration", oracle_agreement),
        ("congested two-bus prices and cap relief", congestion_and_relief),
        ("solve and sweep output is byte-identical across runs", binary_determinism),
    ];
    let mut failures = 0usize;
    for (name, criterion) in criteria {
        match catch_unwind(AssertUnwindSafe(criterion)) {
            Ok(Ok(())) => println!("PASS {name}"),
            Ok(Err(msg)) => {
                println!("FAIL {name}: {msg}");
                failures += 1;
            }
            Err(payload) => {
                println!("FAIL {name}: panicked: {}", panic_text(payload));
                failures += 1;
            }
        }
    }
    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}

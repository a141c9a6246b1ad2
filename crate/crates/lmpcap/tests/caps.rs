//! End-to-end checks of price capping on dispatch cases: capped duals never
//! exceed their caps, binding caps pin the price exactly, quiet caps leave
//! the solution untouched, and the relief accounting ties out against the
//! capped objective.

use lmpcap::model::{
    compile_dispatch, parse_case, Bus, BusCap, DispatchCase, FixedLoad, FlexibleLoad, Generator,
    Line, Sense,
};
use lmpcap::pricecap::{apply_caps, bus_caps, interpret};
use lmpcap::verify::{compare_kkt, kkt_residuals, vertex_oracle, ConditionChange};
use lmpcap::{solve, SolveStatus, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

#[test]
fn caps_clamp_prices_and_account_for_relief() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let opts = SolverOptions::with_tolerance(1e-9);
    let mut optimal = 0usize;
    let mut total = 0usize;
    for trial in 0..40 {
        let buses = 1 + trial % 3;
        let mut case = random_dispatch(&mut rng, buses);
        if trial % 2 == 0 {
            case.sense = Sense::Minimize;
        }
        let compiled = compile_dispatch(&case).unwrap();
        let base = solve(&compiled.qp, &opts);
        total += 1;
        if base.status != SolveStatus::Optimal {
            continue;
        }
        optimal += 1;
        // Target the priciest bus; skip trials where every price is tiny,
        // since halving a near-zero price says nothing.
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
        if price < 0.1 {
            continue;
        }
        for (cap_level, expect_binding) in [(0.5 * price, true), (1.5 * price + 0.1, false)] {
            let caps = bus_caps(
                &[BusCap {
                    bus: bus.clone(),
                    price: cap_level,
                }],
                &compiled.rows,
            )
            .unwrap();
            let capped = apply_caps(&compiled.qp, &compiled.rows, &caps).unwrap();
            let sol = solve(&capped.qp, &opts);
            total += 1;
            if sol.status != SolveStatus::Optimal {
                continue;
            }
            optimal += 1;
            let report = interpret(&capped, &sol).unwrap();
            for o in &report.outcomes {
                assert!(
                    o.dual <= o.price + 1e-6,
                    "trial {trial}: capped dual {} exceeds cap {}",
                    o.dual,
                    o.price
                );
                if o.binding {
                    assert!(
                        (o.dual - o.price).abs() <= 1e-5,
                        "trial {trial}: binding cap should pin the price, got {} vs {}",
                        o.dual,
                        o.price
                    );
                }
            }
            if expect_binding {
                assert!(
                    report.any_binding(),
                    "trial {trial}: cap below the settled price must bind"
                );
            } else {
                assert!(
                    !report.any_binding(),
                    "trial {trial}: cap above the settled price must stay quiet"
                );
                assert!(
                    (sol.objective - base.objective).abs()
                        <= 1e-6 * (1.0 + base.objective.abs()),
                    "trial {trial}: quiet cap changed the objective"
                );
                assert!(report.total_relief <= 1e-6, "trial {trial}: spurious relief");
            }
            // Capped objective = original objective at the dispatch + relief cost.
            let n = compiled.qp.n();
            let physical = sol.x.rows(0, n).into_owned();
            let tied = compiled.qp.objective(&physical) + capped.relief_cost(&sol.x);
            assert!(
                (tied - sol.objective).abs() <= 1e-8 * (1.0 + sol.objective.abs()),
                "trial {trial}: relief accounting is off: {tied} vs {}",
                sol.objective
            );
            // Structural diff: each cap adds exactly one relief column and one row.
            let diff = compare_kkt(
                &compiled.qp,
                Some(&compiled.rows),
                &base,
                &capped.qp,
                Some(&capped.rows),
                &sol,
            )
            .unwrap();
            assert_eq!(diff.changes.len(), 2, "trial {trial}");
            assert!(matches!(diff.changes[0], ConditionChange::RowGainsAlpha { .. }));
            assert!(matches!(
                diff.changes[1],
                ConditionChange::AlphaStationarity { .. }
            ));
            let expected_shared =
                compiled.qp.n() + compiled.qp.num_ineq() + compiled.qp.num_eq() - 1;
            assert_eq!(diff.identical, expected_shared, "trial {trial}");
            if capped.qp.is_linear() && capped.qp.n() <= 12
                && capped.qp.num_ineq() + capped.qp.num_eq() <= 24
            {
                let oracle = vertex_oracle(&capped.qp).unwrap();
                assert!(
                    (sol.objective - oracle.objective).abs()
                        <= 1e-6 * (1.0 + oracle.objective.abs()),
                    "trial {trial}: oracle disagrees on the capped program"
                );
            }
        }
    }
    assert!(
        optimal * 10 >= total * 9,
        "too many non-optimal solves: {optimal}/{total}"
    );
}

const TWO_BUS: &str = r#"{
  "sense": "min",
  "buses": [{"id": "bus1"}, {"id": "bus2"}],
  "generators": [
    {"id": "G1", "bus": "bus1", "a": 1.0, "pmax": 5.0},
    {"id": "G2", "bus": "bus2", "a": 10.0, "pmax": 10.0}
  ],
  "loads": [
    {"id": "L1", "bus": "bus2", "pmin": 8.0, "pmax": 8.0, "fixed": true}
  ],
  "lines": [
    {"id": "T1", "from": "bus1", "to": "bus2", "susceptance": 1.0, "limit": 4.0}
  ]
}"#;

#[test]
fn frozen_congested_cap_scenario() {
    let case = parse_case(TWO_BUS).unwrap();
    let compiled = compile_dispatch(&case).unwrap();
    let opts = SolverOptions::with_tolerance(1e-9);
    let base = solve(&compiled.qp, &opts);
    assert_eq!(base.status, SolveStatus::Optimal);
    // Cheap unit exports its full 4 MW over the congested line; the
    // expensive unit covers the rest, so bus2 settles at 10.
    assert!((base.objective - 44.0).abs() < 1e-6);
    let bus2 = compiled.rows.balance_row("bus2").unwrap();
    assert!((base.nu[bus2] - 10.0).abs() < 1e-6);

    let caps = bus_caps(
        &[BusCap {
            bus: "bus2".into(),
            price: 6.0,
        }],
        &compiled.rows,
    )
    .unwrap();
    let capped = apply_caps(&compiled.qp, &compiled.rows, &caps).unwrap();
    let sol = solve(&capped.qp, &opts);
    assert_eq!(sol.status, SolveStatus::Optimal);
    // At a 6 cap the expensive unit (cost 10) leaves the market entirely:
    // relief covers its 4 MW at the cap price instead.
    let expect_x = [4.0, 0.0, 0.0, -4.0, 4.0];
    for (j, want) in expect_x.iter().enumerate() {
        assert!(
            (sol.x[j] - want).abs() < 1e-6,
            "x[{j}] = {}, want {want}",
            sol.x[j]
        );
    }
    assert!((sol.objective - 28.0).abs() < 1e-6);
    assert!((sol.nu[bus2] - 6.0).abs() < 1e-6);
    let report = interpret(&capped, &sol).unwrap();
    assert!(report.any_binding());
    let outcome = &report.outcomes[0];
    assert!((outcome.alpha - 4.0).abs() < 1e-6);
    assert!((outcome.dual - 6.0).abs() < 1e-6);
    assert!((report.relief_cost - 24.0).abs() < 1e-6);
    let kkt = kkt_residuals(&capped.qp, Some(&capped.rows), &sol, 1e-6).unwrap();
    assert!(kkt.pass, "worst residual {:?}", kkt.worst());
}

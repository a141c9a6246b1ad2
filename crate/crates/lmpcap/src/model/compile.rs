use nalgebra::{DMatrix, DVector};

use super::{build_qp, CanonicalQp, DispatchCase, ModelError, RowMap};

/// A compiled dispatch case: the canonical program, the names of its rows and
/// variables, and any non-fatal findings.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub qp: CanonicalQp,
    pub rows: RowMap,
    pub warnings: Vec<CompileWarning>,
}

/// Non-fatal findings from compilation. Hard errors are reserved for invalid
/// references and malformed data; a case that is merely infeasible compiles
/// and gets its diagnosis from the solver.
#[derive(Debug, Clone, PartialEq)]
pub enum CompileWarning {
    /// A bus with fixed demand has no network path to any generator; the
    /// program is likely infeasible.
    IslandedBus { bus: String, demand: f64 },
}

impl std::fmt::Display for CompileWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CompileWarning::IslandedBus { bus, demand } => write!(
                f,
                "bus {bus:?} carries fixed demand {demand} but has no path to any generator"
            ),
        }
    }
}

/// Compile a dispatch case to the canonical minimization form.
///
/// Variables, in order: one `pg[<gen>]` per generator, one `pl[<load>]` per
/// flexible load, then (for cases with two or more buses) one `theta[<bus>]`
/// per bus. Equality rows: one balance row per bus, written
///
/// ```text
///   (flexible load at k) - (generation at k) + (net DC outflow of k) = -(fixed demand at k)
/// ```
///
/// so that the balance dual is the (nonnegative, at optimum) price of
/// consuming one more unit at the bus; then a `slack[<bus>]` row pinning the
/// first bus angle to zero. Inequality rows: two per line (`line_limit[T,+]`
/// for flow up to the limit in the `from -> to` direction, `line_limit[T,-]`
/// for the reverse), then generator bounds (`gen_lb`, and `gen_ub` when pmax
/// is finite), then flexible-load bounds (`load_lb`, `load_ub` likewise).
/// The objective is total generation cost minus total load benefit; a case
/// declared `max` reads as welfare maximization, which compiles to exactly
/// this minimization. Caps stored in the case are *not* applied here — see
/// the price-cap module.
pub fn compile_dispatch(case: &DispatchCase) -> Result<Compiled, ModelError> {
    validate_case(case)?;

    let bus_index: std::collections::HashMap<&str, usize> = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let nb = case.buses.len();
    let ng = case.generators.len();
    let nl = case.loads.len();
    let with_angles = nb >= 2;
    let n = ng + nl + if with_angles { nb } else { 0 };
    let theta_col = |bus: usize| ng + nl + bus;

    let mut var_labels = Vec::with_capacity(n);
    for g in &case.generators {
        var_labels.push(format!("pg[{}]", g.id));
    }
    for l in &case.loads {
        var_labels.push(format!("pl[{}]", l.id));
    }
    if with_angles {
        for b in &case.buses {
            var_labels.push(format!("theta[{}]", b.id));
        }
    }

    // Objective: cost a*P + q/2*P^2 per generator, minus benefit b*P per
    // flexible load. Stored form always minimizes.
    let mut q = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    for (i, g) in case.generators.iter().enumerate() {
        q[(i, i)] = g.q;
        c[i] = g.a;
    }
    for (j, l) in case.loads.iter().enumerate() {
        c[ng + j] = -l.benefit;
    }

    // Equality rows: balance per bus, then the angle-reference row.
    let me = nb + if with_angles { 1 } else { 0 };
    let mut gmat = DMatrix::zeros(me, n);
    let mut h = DVector::zeros(me);
    let mut eq_labels = Vec::with_capacity(me);
    let mut balance = Vec::with_capacity(nb);
    for (k, bus) in case.buses.iter().enumerate() {
        for (i, g) in case.generators.iter().enumerate() {
            if g.bus == bus.id {
                gmat[(k, i)] -= 1.0;
            }
        }
        for (j, l) in case.loads.iter().enumerate() {
            if l.bus == bus.id {
                gmat[(k, ng + j)] += 1.0;
            }
        }
        if with_angles {
            for line in &case.lines {
                let from = bus_index[line.from.as_str()];
                let to = bus_index[line.to.as_str()];
                // Outflow of bus k over this line: +B(theta_from - theta_to)
                // at the from bus, the negative of that at the to bus.
                if from == k {
                    gmat[(k, theta_col(from))] += line.susceptance;
                    gmat[(k, theta_col(to))] -= line.susceptance;
                } else if to == k {
                    gmat[(k, theta_col(from))] -= line.susceptance;
                    gmat[(k, theta_col(to))] += line.susceptance;
                }
            }
        }
        h[k] = -case.fixed_demand_at(&bus.id);
        eq_labels.push(format!("balance[{}]", bus.id));
        balance.push((bus.id.clone(), k));
    }
    if with_angles {
        gmat[(nb, theta_col(0))] = 1.0;
        eq_labels.push(format!("slack[{}]", case.buses[0].id));
    }

    // Inequality rows: line limits, generator bounds, load bounds.
    let mut rows: Vec<(Vec<(usize, f64)>, f64, String)> = Vec::new();
    for line in &case.lines {
        let from = theta_col(bus_index[line.from.as_str()]);
        let to = theta_col(bus_index[line.to.as_str()]);
        rows.push((
            vec![(from, line.susceptance), (to, -line.susceptance)],
            line.limit,
            format!("line_limit[{},+]", line.id),
        ));
        rows.push((
            vec![(from, -line.susceptance), (to, line.susceptance)],
            line.limit,
            format!("line_limit[{},-]", line.id),
        ));
    }
    for (i, g) in case.generators.iter().enumerate() {
        rows.push((vec![(i, -1.0)], -g.pmin, format!("gen_lb[{}]", g.id)));
        if g.pmax.is_finite() {
            rows.push((vec![(i, 1.0)], g.pmax, format!("gen_ub[{}]", g.id)));
        }
    }
    for (j, l) in case.loads.iter().enumerate() {
        rows.push((vec![(ng + j, -1.0)], -l.pmin, format!("load_lb[{}]", l.id)));
        if l.pmax.is_finite() {
            rows.push((vec![(ng + j, 1.0)], l.pmax, format!("load_ub[{}]", l.id)));
        }
    }

    let mi = rows.len();
    let mut a = DMatrix::zeros(mi, n);
    let mut b = DVector::zeros(mi);
    let mut ineq_labels = Vec::with_capacity(mi);
    for (r, (coeffs, rhs, label)) in rows.into_iter().enumerate() {
        for (col, v) in coeffs {
            a[(r, col)] += v;
        }
        b[r] = rhs;
        ineq_labels.push(label);
    }

    let qp = build_qp(q, c, a, b, gmat, h, case.sense)?;
    let rows = RowMap::new(var_labels, ineq_labels, eq_labels, balance)?;
    let warnings = islanded_buses(case);
    Ok(Compiled { qp, rows, warnings })
}

// Connected components over lines; a component with fixed demand and no
// generator can never balance.
fn islanded_buses(case: &DispatchCase) -> Vec<CompileWarning> {
    let nb = case.buses.len();
    let index: std::collections::HashMap<&str, usize> = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let mut parent: Vec<usize> = (0..nb).collect();
    fn root(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for line in &case.lines {
        let a = root(&mut parent, index[line.from.as_str()]);
        let b = root(&mut parent, index[line.to.as_str()]);
        parent[a] = b;
    }
    let mut component_has_gen = vec![false; nb];
    for g in &case.generators {
        let r = root(&mut parent, index[g.bus.as_str()]);
        component_has_gen[r] = true;
    }
    let mut warnings = Vec::new();
    for (i, bus) in case.buses.iter().enumerate() {
        let demand = case.fixed_demand_at(&bus.id);
        if demand != 0.0 && !component_has_gen[root(&mut parent, i)] {
            warnings.push(CompileWarning::IslandedBus {
                bus: bus.id.clone(),
                demand,
            });
        }
    }
    warnings
}

// Reference and range checks for programmatically built cases; file loading
// performs the same checks against the raw schema with file-relative paths.
fn validate_case(case: &DispatchCase) -> Result<(), ModelError> {
    let err = |path: String, message: String| ModelError::Schema { path, message };
    let mut bus_ids = std::collections::HashSet::new();
    for (i, bus) in case.buses.iter().enumerate() {
        if bus.id.is_empty() {
            return Err(err(format!("buses[{i}].id"), "empty bus id".into()));
        }
        if !bus_ids.insert(bus.id.as_str()) {
            return Err(err(
                format!("buses[{i}].id"),
                format!("duplicate bus id {:?}", bus.id),
            ));
        }
    }
    let known = |id: &str| bus_ids.contains(id);
    let mut ids = std::collections::HashSet::new();
    for (i, g) in case.generators.iter().enumerate() {
        if !ids.insert(g.id.as_str()) {
            return Err(err(
                format!("generators[{i}].id"),
                format!("duplicate generator id {:?}", g.id),
            ));
        }
        if !known(&g.bus) {
            return Err(err(
                format!("generators[{i}].bus"),
                format!("unknown bus {:?}", g.bus),
            ));
        }
        if !(g.a.is_finite() && g.q.is_finite() && g.pmin.is_finite()) || g.pmax.is_nan() {
            return Err(err(format!("generators[{i}]"), "non-finite field".into()));
        }
        if g.q < 0.0 {
            return Err(err(
                format!("generators[{i}].q"),
                "quadratic cost must be nonnegative".into(),
            ));
        }
        if g.pmin > g.pmax {
            return Err(err(
                format!("generators[{i}].pmin"),
                format!("pmin {} exceeds pmax {}", g.pmin, g.pmax),
            ));
        }
    }
    ids.clear();
    for (i, l) in case.loads.iter().enumerate() {
        if !ids.insert(l.id.as_str()) {
            return Err(err(
                format!("loads[{i}].id"),
                format!("duplicate load id {:?}", l.id),
            ));
        }
        if !known(&l.bus) {
            return Err(err(
                format!("loads[{i}].bus"),
                format!("unknown bus {:?}", l.bus),
            ));
        }
        if !(l.benefit.is_finite() && l.pmin.is_finite()) || l.pmax.is_nan() {
            return Err(err(format!("loads[{i}]"), "non-finite field".into()));
        }
        if l.pmin > l.pmax {
            return Err(err(
                format!("loads[{i}].pmin"),
                format!("pmin {} exceeds pmax {}", l.pmin, l.pmax),
            ));
        }
    }
    for (i, l) in case.fixed_loads.iter().enumerate() {
        if !ids.insert(l.id.as_str()) {
            return Err(err(
                format!("fixed_loads[{i}].id"),
                format!("duplicate load id {:?}", l.id),
            ));
        }
        if !known(&l.bus) {
            return Err(err(
                format!("fixed_loads[{i}].bus"),
                format!("unknown bus {:?}", l.bus),
            ));
        }
        if !l.demand.is_finite() {
            return Err(err(
                format!("fixed_loads[{i}].demand"),
                "demand must be finite".into(),
            ));
        }
    }
    ids.clear();
    for (i, l) in case.lines.iter().enumerate() {
        if !ids.insert(l.id.as_str()) {
            return Err(err(
                format!("lines[{i}].id"),
                format!("duplicate line id {:?}", l.id),
            ));
        }
        for (field, bus) in [("from", &l.from), ("to", &l.to)] {
            if !known(bus) {
                return Err(err(
                    format!("lines[{i}].{field}"),
                    format!("unknown bus {:?}", bus),
                ));
            }
        }
        if l.from == l.to {
            return Err(err(
                format!("lines[{i}].to"),
                "line endpoints must differ".into(),
            ));
        }
        if !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
            return Err(err(
                format!("lines[{i}].susceptance"),
                "susceptance must be positive and finite".into(),
            ));
        }
        if !(l.limit > 0.0 && l.limit.is_finite()) {
            return Err(err(
                format!("lines[{i}].limit"),
                "limit must be positive and finite".into(),
            ));
        }
    }
    for (i, c) in case.caps.iter().enumerate() {
        if !known(&c.bus) {
            return Err(err(
                format!("caps[{i}].bus"),
                format!("unknown bus {:?}", c.bus),
            ));
        }
        if !c.price.is_finite() {
            return Err(err(
                format!("caps[{i}].price"),
                "price must be finite".into(),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::super::case::tests::WIDGET;
    use super::super::case::{parse_case, Bus, DispatchCase, FixedLoad, Generator, Line};
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dvector, DMatrix};

    fn row(m: &DMatrix<f64>, r: usize) -> Vec<f64> {
        m.row(r).iter().copied().collect()
    }

    /// Two buses joined by a constrained line: cheap generation at bus1 can
    /// only partially serve the fixed demand at bus2.
    pub(crate) fn two_bus_case() -> DispatchCase {
        let mut case = DispatchCase::empty();
        case.buses = vec![
            Bus { id: "bus1".into() },
            Bus { id: "bus2".into() },
        ];
        case.generators = vec![
            Generator {
                id: "G1".into(),
                bus: "bus1".into(),
                a: 1.0,
                q: 0.0,
                pmin: 0.0,
                pmax: 5.0,
            },
            Generator {
                id: "G2".into(),
                bus: "bus2".into(),
                a: 10.0,
                q: 0.0,
                pmin: 0.0,
                pmax: 10.0,
            },
        ];
        case.fixed_loads = vec![FixedLoad {
            id: "D1".into(),
            bus: "bus2".into(),
            demand: 8.0,
        }];
        case.lines = vec![Line {
            id: "T1".into(),
            from: "bus1".into(),
            to: "bus2".into(),
            susceptance: 1.0,
            limit: 4.0,
        }];
        case
    }

    #[test]
    fn widget_compiles_to_expected_pattern() {
        let case = parse_case(WIDGET).unwrap();
        let compiled = compile_dispatch(&case).unwrap();
        let qp = &compiled.qp;
        // Single bus: variables are [pg[G1], pl[L1]], no angles.
        assert_eq!(compiled.rows.var_labels(), &["pg[G1]", "pl[L1]"]);
        assert!(qp.is_linear());
        assert_eq!(qp.c().as_slice(), &[5.0, -8.0]);
        // One balance row pl - pg = 0.
        assert_eq!(compiled.rows.eq_labels(), &["balance[bus1]"]);
        assert_eq!(row(qp.g(), 0), vec![-1.0, 1.0]);
        assert_eq!(qp.h()[0], 0.0);
        assert_eq!(compiled.rows.balance_row("bus1"), Some(0));
        // Bounds: gen_lb, load_lb, load_ub (pmax of the generator is open).
        assert_eq!(
            compiled.rows.ineq_labels(),
            &["gen_lb[G1]", "load_lb[L1]", "load_ub[L1]"]
        );
        assert_eq!(qp.b().as_slice(), &[0.0, -1.0, 10.0]);
        assert_eq!(row(qp.a(), 0), vec![-1.0, 0.0]);
        assert_eq!(row(qp.a(), 1), vec![0.0, -1.0]);
        assert_eq!(row(qp.a(), 2), vec![0.0, 1.0]);
        // The welfare optimum (pg, pl) = (10, 10) scores -30 internally.
        assert_relative_eq!(qp.objective(&dvector![10.0, 10.0]), -30.0);
        assert!(compiled.warnings.is_empty());
    }

    #[test]
    fn two_bus_structure() {
        let compiled = compile_dispatch(&two_bus_case()).unwrap();
        let qp = &compiled.qp;
        assert_eq!(
            compiled.rows.var_labels(),
            &["pg[G1]", "pg[G2]", "theta[bus1]", "theta[bus2]"]
        );
        assert_eq!(
            compiled.rows.eq_labels(),
            &["balance[bus1]", "balance[bus2]", "slack[bus1]"]
        );
        assert_eq!(
            compiled.rows.ineq_labels(),
            &[
                "line_limit[T1,+]",
                "line_limit[T1,-]",
                "gen_lb[G1]",
                "gen_ub[G1]",
                "gen_lb[G2]",
                "gen_ub[G2]"
            ]
        );
        // balance[bus1]: -pg1 + (theta1 - theta2) = 0
        assert_eq!(row(qp.g(), 0), vec![-1.0, 0.0, 1.0, -1.0]);
        assert_eq!(qp.h()[0], 0.0);
        // balance[bus2]: -pg2 - (theta1 - theta2) = -8
        assert_eq!(row(qp.g(), 1), vec![0.0, -1.0, -1.0, 1.0]);
        assert_eq!(qp.h()[1], -8.0);
        // slack row pins theta[bus1].
        assert_eq!(row(qp.g(), 2), vec![0.0, 0.0, 1.0, 0.0]);
        // The congestion dispatch: G1 at 4 through the line, G2 covers 4.
        let x = dvector![4.0, 4.0, 0.0, -4.0];
        assert!(qp.max_violation(&x) < 1e-12);
        assert_relative_eq!(qp.objective(&x), 44.0);
        assert!(compiled.warnings.is_empty());
    }

    #[test]
    fn empty_case_compiles_to_zero_variables() {
        let compiled = compile_dispatch(&DispatchCase::empty()).unwrap();
        assert_eq!(compiled.qp.n(), 0);
        assert_eq!(compiled.qp.num_ineq(), 0);
        assert_eq!(compiled.qp.num_eq(), 0);
    }

    #[test]
    fn islanded_demand_warns_but_compiles() {
        let mut case = two_bus_case();
        case.lines.clear();
        let compiled = compile_dispatch(&case).unwrap();
        // bus2 still has its own generator, so no warning yet...
        assert!(compiled.warnings.is_empty());
        // ...but removing it islands the demand.
        case.generators.pop();
        let compiled = compile_dispatch(&case).unwrap();
        assert_eq!(
            compiled.warnings,
            vec![CompileWarning::IslandedBus {
                bus: "bus2".into(),
                demand: 8.0
            }]
        );
    }

    #[test]
    fn unknown_bus_reference_is_a_hard_error() {
        let mut case = two_bus_case();
        case.generators[0].bus = "nowhere".into();
        let err = compile_dispatch(&case).unwrap_err();
        match err {
            ModelError::Schema { path, .. } => assert_eq!(path, "generators[0].bus"),
            other => panic!("expected Schema, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_cost_lands_on_diagonal() {
        let mut case = two_bus_case();
        case.generators[1].q = 0.5;
        let compiled = compile_dispatch(&case).unwrap();
        assert_eq!(compiled.qp.q()[(1, 1)], 0.5);
        assert!(!compiled.qp.is_linear());
    }
}

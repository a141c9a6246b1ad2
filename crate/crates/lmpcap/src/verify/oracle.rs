use nalgebra::{DMatrix, DVector, Dyn};

use super::VerifyError;
use crate::model::CanonicalQp;
use crate::solver::{KktSummary, Solution, SolveStatus};

/// Hard size limits for [`vertex_oracle`]: beyond this the enumeration count
/// is no longer a cross-check tool.
const MAX_VERTEX_VARS: usize = 12;
const MAX_VERTEX_ROWS: usize = 24;

/// Variables limit for [`grid_oracle`].
const MAX_GRID_VARS: usize = 3;

/// Points per axis at each grid refinement level.
const GRID_POINTS: usize = 33;

/// Exact LP solve by enumeration of candidate active sets.
///
/// Requires `Q = 0` and a small problem (n <= 12, total rows <= 24). Every
/// size-`n` row subset that contains a maximal independent set of the
/// equality rows is treated as a candidate basis; the basis system is solved,
/// feasible candidates are scored, and the best one wins. Ties (within
/// `1e-9` relative) are broken toward a basis with nonnegative inequality
/// multipliers and then toward the lexicographically smallest row subset, so
/// degenerate problems still resolve deterministically. Unboundedness is
/// detected two ways: a direction the constraints never see but the
/// objective does, or an improving, globally feasible edge at a tied-optimal
/// basis.
///
/// The returned multipliers are the basis duals (zero off the basis).
/// `iterations` counts examined bases. Errors: [`VerifyError::NotLinear`],
/// [`VerifyError::BudgetExceeded`], [`VerifyError::Infeasible`],
/// [`VerifyError::UnboundedLp`].
pub fn vertex_oracle(qp: &CanonicalQp) -> Result<Solution, VerifyError> {
    let max_abs_q = qp.q().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs_q > 0.0 {
        return Err(VerifyError::NotLinear { max_abs_q });
    }
    let (n, mi, me) = (qp.n(), qp.num_ineq(), qp.num_eq());
    if n > MAX_VERTEX_VARS || mi + me > MAX_VERTEX_ROWS {
        return Err(VerifyError::BudgetExceeded {
            what: format!(
                "{n} variables / {} rows (limits {MAX_VERTEX_VARS} and {MAX_VERTEX_ROWS})",
                mi + me
            ),
        });
    }

    // Stacked row view: equality rows first, then inequality rows.
    let rows = Rows {
        g: qp.g().clone(),
        h: qp.h().clone(),
        a: qp.a().clone(),
        b: qp.b().clone(),
    };
    let out = solve_lp(&rows, qp.c())?;

    let objective = qp.objective(&out.x);
    let kkt = summarize(qp, &out.x, &out.lambda, &out.nu, objective);
    Ok(Solution {
        x: out.x,
        lambda: out.lambda,
        nu: out.nu,
        status: SolveStatus::Optimal,
        objective,
        kkt,
        iterations: out.bases_examined,
        note: None,
    })
}

struct Rows {
    g: DMatrix<f64>,
    h: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

struct LpOut {
    x: DVector<f64>,
    lambda: DVector<f64>,
    nu: DVector<f64>,
    bases_examined: usize,
}

fn solve_lp(rows: &Rows, c: &DVector<f64>) -> Result<LpOut, VerifyError> {
    let n = c.len();
    let (me, mi) = (rows.g.nrows(), rows.a.nrows());

    if n == 0 {
        return if feasible_empty(rows) {
            Ok(LpOut {
                x: DVector::zeros(0),
                lambda: DVector::zeros(mi),
                nu: DVector::zeros(me),
                bases_examined: 0,
            })
        } else {
            Err(VerifyError::Infeasible)
        };
    }

    // If the stacked rows do not span R^n, the problem really lives in the
    // row space: a free direction the objective sees means unbounded (once
    // the constraints are known satisfiable at all); otherwise change basis
    // to the row space and enumerate there.
    let row_basis = orthonormal_row_basis(rows, n);
    let rank = row_basis.len();
    if rank < n {
        let free = complement_basis(&row_basis, n);
        let c_scale = 1.0 + c.abs().max();
        if free.iter().any(|d| c.dot(d).abs() > 1e-9 * c_scale) {
            // The objective improves without limit along a direction no row
            // constrains — provided anything is feasible in the first place.
            // The zero-objective pass cannot re-enter this branch.
            solve_lp(rows, &DVector::zeros(n))?;
            return Err(VerifyError::UnboundedLp);
        }
        let mut w = DMatrix::zeros(n, rank);
        for (j, v) in row_basis.iter().enumerate() {
            w.set_column(j, v);
        }
        let reduced = Rows {
            g: &rows.g * &w,
            h: rows.h.clone(),
            a: &rows.a * &w,
            b: rows.b.clone(),
        };
        let out = solve_lp(&reduced, &(w.transpose() * c))?;
        return Ok(LpOut {
            x: &w * out.x,
            lambda: out.lambda,
            nu: out.nu,
            bases_examined: out.bases_examined,
        });
    }

    // Maximal independent subset of equality rows (in row order); dependent
    // equality rows are checked for feasibility like any other row but never
    // enter a basis.
    let eq_core = independent_rows(&rows.g);
    let k_free = n - eq_core.len();
    // rank([G; A]) = n forces n - rank(G) <= number of inequality rows.
    assert!(k_free <= mi, "no completable basis in a rank-{n} system");

    let scale = rows
        .g
        .iter()
        .chain(rows.a.iter())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let sing_tol = 1e-10 * scale * n as f64;
    let tie_tol = |best: f64| 1e-9 * (1.0 + best.abs());

    let mut best: Option<f64> = None;
    let mut tied: Vec<(Vec<usize>, DVector<f64>)> = Vec::new();
    const MAX_TIED: usize = 4096;
    let mut examined = 0usize;

    // Candidate bases: eq_core plus every k_free-subset of inequality rows,
    // visited in lexicographic order of inequality indices.
    let mut combo = Combos::new(mi, k_free);
    while let Some(subset) = combo.next() {
        examined += 1;
        let mut basis: Vec<usize> = eq_core.clone();
        basis.extend(subset.iter().map(|&i| me + i));
        let (mat, rhs) = gather(rows, &basis, n);
        let lu = mat.full_piv_lu();
        if !pivots_clear(&lu, n, sing_tol) {
            continue;
        }
        let x = match lu.solve(&rhs) {
            Some(x) => x,
            None => continue,
        };
        if !point_feasible(rows, &x) {
            continue;
        }
        let obj = c.dot(&x);
        match best {
            None => {
                best = Some(obj);
                tied.push((basis, x));
            }
            Some(b) if obj < b - tie_tol(b) => {
                best = Some(obj);
                tied.clear();
                tied.push((basis, x));
            }
            Some(b) if obj <= b + tie_tol(b) => {
                if tied.len() < MAX_TIED {
                    tied.push((basis, x));
                }
            }
            Some(_) => {}
        }
    }

    if tied.is_empty() {
        return Err(VerifyError::Infeasible);
    }

    // An unbounded LP whose rows span R^n always exposes an improving
    // feasible edge at some basis of the best vertex; check them all.
    for (basis, _) in &tied {
        if has_unbounded_edge(rows, c, basis, me, n) {
            return Err(VerifyError::UnboundedLp);
        }
    }

    // Prefer a dual-feasible basis; fall back to the lexicographically first.
    let mut chosen = 0usize;
    let mut chosen_duals: Option<DVector<f64>> = None;
    for (idx, (basis, _)) in tied.iter().enumerate() {
        if let Some(y) = basis_duals(rows, c, basis, n) {
            let dual_ok = basis
                .iter()
                .zip(y.iter())
                .all(|(&row, &yi)| row < me || yi >= -1e-7);
            if chosen_duals.is_none() || dual_ok {
                chosen = idx;
                chosen_duals = Some(y);
                if dual_ok {
                    break;
                }
            }
        }
    }
    let (basis, x) = &tied[chosen];
    let mut lambda = DVector::zeros(mi);
    let mut nu = DVector::zeros(me);
    if let Some(y) = chosen_duals {
        for (&row, &yi) in basis.iter().zip(y.iter()) {
            if row < me {
                nu[row] = yi;
            } else {
                lambda[row - me] = yi;
            }
        }
    }
    Ok(LpOut {
        x: x.clone(),
        lambda,
        nu,
        bases_examined: examined,
    })
}

fn feasible_empty(rows: &Rows) -> bool {
    rows.b.iter().all(|&b| b >= -1e-9 * (1.0 + b.abs()))
        && rows.h.iter().all(|&h| h.abs() <= 1e-9 * (1.0 + h.abs()))
}

// Orthonormal basis of the stacked row space, by modified Gram-Schmidt with
// one re-orthogonalization pass.
fn orthonormal_row_basis(rows: &Rows, n: usize) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let all = rows.g.row_iter().chain(rows.a.row_iter());
    for row in all {
        let v: DVector<f64> = row.transpose();
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        let v = project_out(v, &basis);
        let v = project_out(v, &basis);
        if v.norm() > 1e-10 * norm0 {
            let vn = v.norm();
            basis.push(v / vn);
            if basis.len() == n {
                break;
            }
        }
    }
    basis
}

fn project_out(mut v: DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    for b in basis {
        let p = b.dot(&v);
        v.axpy(-p, b, 1.0);
    }
    v
}

// Orthonormal basis of the complement of `basis` in R^n.
fn complement_basis(basis: &[DVector<f64>], n: usize) -> Vec<DVector<f64>> {
    let mut free: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        let v = project_out(project_out(e, basis), &free);
        let v = project_out(v, &free);
        if v.norm() > 1e-10 {
            let vn = v.norm();
            free.push(v / vn);
            if basis.len() + free.len() == n {
                break;
            }
        }
    }
    free
}

// Greedy maximal independent row subset, by modified Gram-Schmidt.
fn independent_rows(g: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for i in 0..g.nrows() {
        let v: DVector<f64> = g.row(i).transpose();
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        let v = project_out(project_out(v, &basis), &basis);
        if v.norm() > 1e-10 * norm0 {
            let vn = v.norm();
            basis.push(v / vn);
            kept.push(i);
        }
    }
    kept
}

// Full-rank test for a factored basis: every pivot of U clears the cutoff.
fn pivots_clear(lu: &nalgebra::FullPivLU<f64, Dyn, Dyn>, n: usize, tol: f64) -> bool {
    let u = lu.u();
    (0..n).all(|i| u[(i, i)].abs() > tol)
}

fn gather(rows: &Rows, basis: &[usize], n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let me = rows.g.nrows();
    let mut mat = DMatrix::zeros(basis.len(), n);
    let mut rhs = DVector::zeros(basis.len());
    for (k, &row) in basis.iter().enumerate() {
        if row < me {
            mat.row_mut(k).copy_from(&rows.g.row(row));
            rhs[k] = rows.h[row];
        } else {
            mat.row_mut(k).copy_from(&rows.a.row(row - me));
            rhs[k] = rows.b[row - me];
        }
    }
    (mat, rhs)
}

fn point_feasible(rows: &Rows, x: &DVector<f64>) -> bool {
    for i in 0..rows.g.nrows() {
        let r = rows.g.row(i).transpose().dot(x) - rows.h[i];
        if r.abs() > 1e-7 * (1.0 + rows.h[i].abs()) {
            return false;
        }
    }
    for i in 0..rows.a.nrows() {
        let v = rows.a.row(i).transpose().dot(x) - rows.b[i];
        if v > 1e-7 * (1.0 + rows.b[i].abs()) {
            return false;
        }
    }
    true
}

// Basis multipliers: solve R_C^T y = -c.
fn basis_duals(rows: &Rows, c: &DVector<f64>, basis: &[usize], n: usize) -> Option<DVector<f64>> {
    let (mat, _) = gather(rows, basis, n);
    mat.transpose().full_piv_lu().solve(&(-c))
}

// Does relaxing one basic inequality row give a globally feasible direction
// that improves the objective without limit?
fn has_unbounded_edge(rows: &Rows, c: &DVector<f64>, basis: &[usize], me: usize, n: usize) -> bool {
    let (mat, _) = gather(rows, basis, n);
    let lu = mat.full_piv_lu();
    for (k, &row) in basis.iter().enumerate() {
        if row < me {
            continue; // equality rows stay active
        }
        let mut rhs = DVector::zeros(n);
        rhs[k] = -1.0;
        let d = match lu.solve(&rhs) {
            Some(d) => d,
            None => continue,
        };
        let dmax = d.abs().max();
        if dmax <= 0.0 {
            continue;
        }
        let d = d / dmax;
        if c.dot(&d) >= -1e-9 * (1.0 + c.abs().max()) {
            continue;
        }
        let mut feasible_ray = true;
        for i in 0..rows.a.nrows() {
            let gi = rows.a.row(i).transpose();
            if gi.dot(&d) > 1e-9 * (1.0 + gi.abs().max()) {
                feasible_ray = false;
                break;
            }
        }
        if feasible_ray {
            // Equality rows satisfy G d = 0 automatically: the independent
            // ones sit in the basis and the rest depend on them.
            return true;
        }
    }
    false
}

fn summarize(
    qp: &CanonicalQp,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    nu: &DVector<f64>,
    objective: f64,
) -> KktSummary {
    let primal = qp.max_violation(x);
    let dual = if qp.n() == 0 {
        0.0
    } else {
        let mut stat = qp.c() + qp.q() * x;
        if qp.num_ineq() > 0 {
            stat += qp.a().transpose() * lambda;
        }
        if qp.num_eq() > 0 {
            stat += qp.g().transpose() * nu;
        }
        stat.abs().max() / (1.0 + qp.c().abs().max())
    };
    let mi = qp.num_ineq();
    let complementarity = if mi == 0 {
        0.0
    } else {
        let slack = qp.ineq_slack(x);
        let total: f64 = (0..mi).map(|i| (lambda[i] * slack[i]).abs()).sum();
        (total / mi as f64) / (1.0 + objective.abs())
    };
    KktSummary {
        primal,
        dual,
        complementarity,
    }
}

// Lexicographic k-subsets of 0..m.
struct Combos {
    m: usize,
    k: usize,
    state: Option<Vec<usize>>,
    started: bool,
}

impl Combos {
    fn new(m: usize, k: usize) -> Self {
        let state = if k <= m {
            Some((0..k).collect())
        } else {
            None
        };
        Combos {
            m,
            k,
            state,
            started: false,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        let state = self.state.as_mut()?;
        if !self.started {
            self.started = true;
            return Some(self.state.as_deref().unwrap());
        }
        if self.k == 0 {
            self.state = None;
            return None;
        }
        // Advance the rightmost index that can move.
        let mut i = self.k;
        loop {
            if i == 0 {
                self.state = None;
                return None;
            }
            i -= 1;
            if state[i] + 1 <= self.m - (self.k - i) {
                state[i] += 1;
                for j in (i + 1)..self.k {
                    state[j] = state[j - 1] + 1;
                }
                break;
            }
        }
        self.state.as_deref()
    }
}

/// Result of a grid search: the best feasible grid point and a bound on how
/// far its objective can sit above the true optimum.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// `spacing * |grad f|_1 + spacing^2 * n * |Q|_max / 2` at the final
    /// refinement level: how much the optimum can improve on the best grid
    /// point if it lies within one cell of it.
    pub accuracy_bound: f64,
    pub evaluations: usize,
}

/// Approximate QP solve by coarse-to-fine grid refinement over a box.
///
/// Works for any convex objective but only tiny dimensions (n <= 3). Each
/// level lays a 33-point lattice per axis over the current box, keeps the
/// best feasible point, and shrinks the box to one cell around it until the
/// spacing reaches `resolution`. Inequality rows are enforced strictly
/// (within roundoff); equality rows within half a cell, tightening as the
/// grid refines. Errors: [`VerifyError::BudgetExceeded`],
/// [`VerifyError::ShapeMismatch`], [`VerifyError::NoFeasibleGridPoint`].
pub fn grid_oracle(
    qp: &CanonicalQp,
    bounds: &[(f64, f64)],
    resolution: f64,
) -> Result<GridSolution, VerifyError> {
    let n = qp.n();
    if n > MAX_GRID_VARS {
        return Err(VerifyError::BudgetExceeded {
            what: format!("{n} variables (grid limit {MAX_GRID_VARS})"),
        });
    }
    if bounds.len() != n {
        return Err(VerifyError::ShapeMismatch {
            what: format!("{} bounds for {n} variables", bounds.len()),
        });
    }
    assert!(resolution > 0.0, "resolution must be positive");
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        assert!(
            lo.is_finite() && hi.is_finite() && lo <= hi,
            "bad box on axis {i}"
        );
    }
    if n == 0 {
        return Ok(GridSolution {
            x: DVector::zeros(0),
            objective: 0.0,
            accuracy_bound: 0.0,
            evaluations: 1,
        });
    }

    let mut lo: Vec<f64> = bounds.iter().map(|&(l, _)| l).collect();
    let mut hi: Vec<f64> = bounds.iter().map(|&(_, u)| u).collect();
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut evaluations = 0usize;
    let mut spacing = f64::INFINITY;

    for _level in 0..64 {
        spacing = lo
            .iter()
            .zip(hi.iter())
            .map(|(&l, &u)| (u - l) / (GRID_POINTS - 1) as f64)
            .fold(0.0f64, f64::max);
        match scan_level(qp, &lo, &hi, spacing, &mut evaluations) {
            None => {
                if best.is_none() {
                    return Err(VerifyError::NoFeasibleGridPoint);
                }
                // A refined level can lose its feasible points only through
                // the tightening equality band; keep centering on the last
                // point that had one.
            }
            // Later levels replace earlier ones outright: their tighter
            // equality band makes values from coarser levels incomparable.
            Some(found) => best = Some(found),
        }
        let center = best.as_ref().expect("feasible point recorded").0.clone();
        for i in 0..n {
            let cell = (hi[i] - lo[i]) / (GRID_POINTS - 1) as f64;
            lo[i] = (center[i] - cell).max(bounds[i].0);
            hi[i] = (center[i] + cell).min(bounds[i].1);
        }
        if spacing <= resolution {
            break;
        }
    }

    let (x, objective) = best.expect("loop established a best point");
    let grad = qp.q() * &x + qp.c();
    let qmax = qp.q().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let accuracy_bound = spacing * grad.iter().map(|g| g.abs()).sum::<f64>()
        + 0.5 * spacing * spacing * n as f64 * qmax;
    Ok(GridSolution {
        x,
        objective,
        accuracy_bound,
        evaluations,
    })
}

fn scan_level(
    qp: &CanonicalQp,
    lo: &[f64],
    hi: &[f64],
    spacing: f64,
    evaluations: &mut usize,
) -> Option<(DVector<f64>, f64)> {
    let n = qp.n();
    let mut idx = vec![0usize; n];
    let mut x = DVector::zeros(n);
    let mut best: Option<(DVector<f64>, f64)> = None;
    loop {
        for i in 0..n {
            let t = idx[i] as f64 / (GRID_POINTS - 1) as f64;
            x[i] = lo[i] + t * (hi[i] - lo[i]);
        }
        *evaluations += 1;
        if grid_feasible(qp, &x, spacing) {
            let f = qp.objective(&x);
            if best.as_ref().map_or(true, |(_, bf)| f < *bf) {
                best = Some((x.clone(), f));
            }
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            idx[i] += 1;
            if idx[i] < GRID_POINTS {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn grid_feasible(qp: &CanonicalQp, x: &DVector<f64>, spacing: f64) -> bool {
    let slack = qp.ineq_slack(x);
    for i in 0..slack.len() {
        if slack[i] < -1e-9 * (1.0 + qp.b()[i].abs()) {
            return false;
        }
    }
    let resid = qp.eq_residual(x);
    for i in 0..resid.len() {
        let band = 0.5 * spacing * qp.g().row(i).iter().map(|v| v.abs()).sum::<f64>()
            + 1e-9 * (1.0 + qp.h()[i].abs());
        if resid[i].abs() > band {
            return false;
        }
    }
    true
}

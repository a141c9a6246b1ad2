//! Explicit duals.
//!
//! For a strictly convex program `min 1/2 x'Qx + c'x` over `Ax <= b`,
//! `Gx = h`, the inner minimization of the Lagrangian can be carried out in
//! closed form, leaving a concave function of the multipliers alone:
//! `g(y) = -1/2 y'Py - t'y - 1/2 c'Q^{-1}c` with `P = R Q^{-1} R'` and
//! `t = r + R Q^{-1} c`, where `(R, r)` stacks the inequality rows with each
//! equality row folded into a `+`/`-` pair so that every multiplier is
//! sign-constrained. Maximizing `g` is itself a convex program, so the same
//! solver runs on both sides; any nonnegative multiplier vector gives a
//! certified lower bound on the primal optimum, and the primal minimizer is
//! recovered from the dual one in closed form.
//!
//! Linear programs have no `Q` to invert; [`lp_dual`] builds their dual
//! directly, with named variables and rows, and applying it twice leads back
//! to the original optimum.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::model::{build_qp, CanonicalQp, ModelError, RowMap, Sense};
use crate::solver::{solve, Solution, SolverOptions};

/// Minimum eigenvalue of `Q` for the closed-form dual to exist.
pub const STRICT_CONVEXITY_TOL: f64 = 1e-10;

/// Multipliers may dip this far below zero before they are rejected
/// (interior-point output sits within this of feasibility).
const MULTIPLIER_TOL: f64 = 1e-9;

/// Errors from dual construction and evaluation.
#[derive(Debug, Error)]
pub enum DualizeError {
    #[error(
        "Q has minimum eigenvalue {min_eigenvalue:.3e}; the closed-form dual needs strict \
         convexity — for a linear program use the linear dual instead"
    )]
    NotStrictlyConvex { min_eigenvalue: f64 },
    #[error("the program is not linear (|Q| reaches {max_abs_q:.3e}); build the closed-form dual instead")]
    NotLinear { max_abs_q: f64 },
    #[error("multiplier {index} is negative ({value:.3e}); dual bounds need sign-feasible multipliers")]
    NegativeMultiplier { index: usize, value: f64 },
    #[error("point violates the constraints by {violation:.3e}; the gap is defined at feasible points")]
    InfeasiblePoint { violation: f64 },
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The closed-form dual of a strictly convex program.
///
/// Holds the dual data `(P, t, constant)` together with the folded
/// constraint stack and a cached factorization of `Q`, so dual values and
/// primal recovery cost one triangular solve each.
#[derive(Clone, Debug)]
pub struct DualQp {
    p: DMatrix<f64>,
    t: DVector<f64>,
    constant: f64,
    chol: Cholesky<f64, Dyn>,
    folded_rows: DMatrix<f64>,
    c: DVector<f64>,
    num_ineq: usize,
    num_eq: usize,
    source: u64,
}

/// Build the closed-form dual of `qp`.
///
/// Inequality multipliers come first; each equality row `j` then contributes
/// an interleaved pair of multipliers (for `g_j x <= h_j` and
/// `-g_j x <= -h_j`) whose difference plays the role of the free equality
/// multiplier. Fails with [`DualizeError::NotStrictlyConvex`] when `Q`'s
/// smallest eigenvalue is below [`STRICT_CONVEXITY_TOL`].
pub fn build_dual_qp(qp: &CanonicalQp) -> Result<DualQp, DualizeError> {
    let n = qp.n();
    let min_eigenvalue = if n == 0 {
        f64::INFINITY
    } else {
        qp.q()
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    };
    if min_eigenvalue < STRICT_CONVEXITY_TOL {
        return Err(DualizeError::NotStrictlyConvex { min_eigenvalue });
    }
    let chol = Cholesky::new(qp.q().clone())
        .ok_or(DualizeError::NotStrictlyConvex { min_eigenvalue })?;

    let (mi, me) = (qp.num_ineq(), qp.num_eq());
    let m = mi + 2 * me;
    let mut folded_rows = DMatrix::zeros(m, n);
    let mut folded_rhs = DVector::zeros(m);
    folded_rows.rows_mut(0, mi).copy_from(qp.a());
    folded_rhs.rows_mut(0, mi).copy_from(qp.b());
    for j in 0..me {
        folded_rows.row_mut(mi + 2 * j).copy_from(&qp.g().row(j));
        folded_rhs[mi + 2 * j] = qp.h()[j];
        folded_rows
            .row_mut(mi + 2 * j + 1)
            .copy_from(&(-qp.g().row(j)));
        folded_rhs[mi + 2 * j + 1] = -qp.h()[j];
    }

    // P = R Q^{-1} R', t = r + R Q^{-1} c, constant = 1/2 c' Q^{-1} c.
    let qinv_rt = chol.solve(&folded_rows.transpose());
    let p = &folded_rows * &qinv_rt;
    // Symmetrize away roundoff so the dual passes its own validation.
    let p = 0.5 * (&p + p.transpose());
    let qinv_c = chol.solve(qp.c());
    let t = folded_rhs + &folded_rows * &qinv_c;
    let constant = 0.5 * qp.c().dot(&qinv_c);

    Ok(DualQp {
        p,
        t,
        constant,
        chol,
        folded_rows,
        c: qp.c().clone(),
        num_ineq: mi,
        num_eq: me,
        source: qp.id(),
    })
}

impl DualQp {
    /// Number of folded multipliers: one per inequality row plus two per
    /// equality row.
    pub fn num_multipliers(&self) -> usize {
        self.num_ineq + 2 * self.num_eq
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn t(&self) -> &DVector<f64> {
        &self.t
    }

    /// The constant `1/2 c'Q^{-1}c` subtracted from every dual value.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Fingerprint of the program this dual was built from.
    pub fn source_id(&self) -> u64 {
        self.source
    }

    /// Names for the folded multipliers, given the source program's rows.
    pub fn folded_row_labels(&self, rows: &RowMap) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.num_multipliers());
        for l in rows.ineq_labels() {
            labels.push(l.clone());
        }
        for l in rows.eq_labels() {
            labels.push(format!("{l}[+]"));
            labels.push(format!("{l}[-]"));
        }
        labels
    }

    /// The dual function `g(y) = -1/2 y'Py - t'y - constant`.
    ///
    /// For any sign-feasible `y` this is a hard lower bound on the primal
    /// optimum (weak duality), whether or not `y` is anywhere near optimal.
    pub fn value(&self, multipliers: &DVector<f64>) -> Result<f64, DualizeError> {
        self.check(multipliers)?;
        Ok(-0.5 * (&self.p * multipliers).dot(multipliers) - self.t.dot(multipliers)
            - self.constant)
    }

    /// The unique minimizer of the Lagrangian at `y`:
    /// `x(y) = -Q^{-1}(c + R'y)`. At the dual optimum this is the primal
    /// optimum.
    pub fn recover_primal(&self, multipliers: &DVector<f64>) -> Result<DVector<f64>, DualizeError> {
        self.check(multipliers)?;
        let rhs = &self.c + self.folded_rows.transpose() * multipliers;
        Ok(-self.chol.solve(&rhs))
    }

    /// The dual as a program for the solver: `min 1/2 y'Py + t'y` over
    /// `y >= 0`. Its optimal value maps back through [`DualQp::primal_bound`].
    pub fn to_qp(&self) -> CanonicalQp {
        let m = self.num_multipliers();
        build_qp(
            self.p.clone(),
            self.t.clone(),
            -DMatrix::identity(m, m),
            DVector::zeros(m),
            DMatrix::zeros(0, m),
            DVector::zeros(0),
            Sense::Minimize,
        )
        .expect("the dual data form a valid program")
    }

    /// Map an objective value of [`DualQp::to_qp`] back to the bound it
    /// certifies on the primal optimum.
    pub fn primal_bound(&self, dual_objective: f64) -> f64 {
        -dual_objective - self.constant
    }

    fn check(&self, multipliers: &DVector<f64>) -> Result<(), DualizeError> {
        if multipliers.len() != self.num_multipliers() {
            return Err(DualizeError::DimensionMismatch {
                what: "multipliers",
                expected: self.num_multipliers(),
                found: multipliers.len(),
            });
        }
        for (i, &v) in multipliers.iter().enumerate() {
            if v < -MULTIPLIER_TOL {
                return Err(DualizeError::NegativeMultiplier { index: i, value: v });
            }
        }
        Ok(())
    }

    /// Fold separate inequality and equality multipliers into this dual's
    /// layout, splitting each equality multiplier into its positive and
    /// negative parts.
    pub fn fold_multipliers(
        &self,
        lambda: &DVector<f64>,
        nu: &DVector<f64>,
    ) -> Result<DVector<f64>, DualizeError> {
        if lambda.len() != self.num_ineq {
            return Err(DualizeError::DimensionMismatch {
                what: "lambda",
                expected: self.num_ineq,
                found: lambda.len(),
            });
        }
        if nu.len() != self.num_eq {
            return Err(DualizeError::DimensionMismatch {
                what: "nu",
                expected: self.num_eq,
                found: nu.len(),
            });
        }
        let mut folded = DVector::zeros(self.num_multipliers());
        folded.rows_mut(0, self.num_ineq).copy_from(lambda);
        for j in 0..self.num_eq {
            folded[self.num_ineq + 2 * j] = nu[j].max(0.0);
            folded[self.num_ineq + 2 * j + 1] = (-nu[j]).max(0.0);
        }
        Ok(folded)
    }
}

/// Solve the dual program of `dual` with the shared solver.
///
/// The returned solution is in the dual's own coordinates: `x` holds the
/// folded multipliers and `objective` the dual program's minimize-form
/// value; pass the latter through [`DualQp::primal_bound`] for the certified
/// primal bound.
pub fn solve_dual_qp(dual: &DualQp, options: &SolverOptions) -> Solution {
    solve(&dual.to_qp(), options)
}

/// A linear program's dual, with named variables and rows.
#[derive(Debug, Clone)]
pub struct LpDual {
    pub qp: CanonicalQp,
    pub rows: RowMap,
}

/// Build the dual of a linear program.
///
/// For `min c'x` over `Ax <= b`, `Gx = h`, the dual decision variables are
/// one `lambda[<row>]` per inequality row and one `nu[<row>]` per equality
/// row; the program is `min b'lambda + h'nu` subject to one
/// `stationarity[<var>]` equality per primal variable
/// (`A'lambda + G'nu = -c`) and one `nonneg[<row>]` sign row per `lambda`.
/// Its minimize-form optimum is the negative of the primal's; applying the
/// construction twice returns to the primal optimum. Fails with
/// [`DualizeError::NotLinear`] when `Q` is nonzero.
pub fn lp_dual(qp: &CanonicalQp, rows: Option<&RowMap>) -> Result<LpDual, DualizeError> {
    let max_abs_q = qp.q().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs_q > 0.0 {
        return Err(DualizeError::NotLinear { max_abs_q });
    }
    let (n, mi, me) = (qp.n(), qp.num_ineq(), qp.num_eq());
    let synthetic;
    let rows = match rows {
        Some(r) => r,
        None => {
            synthetic = RowMap::synthetic(n, mi, me);
            &synthetic
        }
    };

    let nd = mi + me;
    // Objective: b'lambda + h'nu.
    let mut c_d = DVector::zeros(nd);
    c_d.rows_mut(0, mi).copy_from(qp.b());
    c_d.rows_mut(mi, me).copy_from(qp.h());
    // Stationarity: A'lambda + G'nu = -c.
    let mut g_d = DMatrix::zeros(n, nd);
    g_d.view_mut((0, 0), (n, mi))
        .copy_from(&qp.a().transpose());
    g_d.view_mut((0, mi), (n, me))
        .copy_from(&qp.g().transpose());
    let h_d = -qp.c();
    // Sign rows: -lambda <= 0.
    let mut a_d = DMatrix::zeros(mi, nd);
    for i in 0..mi {
        a_d[(i, i)] = -1.0;
    }
    let b_d = DVector::zeros(mi);

    let mut var_labels = Vec::with_capacity(nd);
    for l in rows.ineq_labels() {
        var_labels.push(format!("lambda[{l}]"));
    }
    for l in rows.eq_labels() {
        var_labels.push(format!("nu[{l}]"));
    }
    let ineq_labels = rows
        .ineq_labels()
        .iter()
        .map(|l| format!("nonneg[{l}]"))
        .collect();
    let eq_labels = rows
        .var_labels()
        .iter()
        .map(|l| format!("stationarity[{l}]"))
        .collect();

    let qp = CanonicalQp::linear(c_d, a_d, b_d, g_d, h_d, Sense::Minimize)?;
    let rows = RowMap::new(var_labels, ineq_labels, eq_labels, Vec::new())?;
    Ok(LpDual { qp, rows })
}

/// The dual value of `(lambda, nu)` for `qp`, when it is expressible.
///
/// Strictly convex programs evaluate the closed form; linear programs
/// return `-b'lambda - h'nu` when the multipliers satisfy stationarity to
/// within `1e-6` relative (and `-infinity` otherwise, which is what the
/// dual function truly is off that set).
pub fn dual_value(
    qp: &CanonicalQp,
    lambda: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<f64, DualizeError> {
    if qp.is_linear() {
        check_lengths(qp, lambda, nu)?;
        check_signs(lambda)?;
        let mut stat = qp.c().clone();
        if qp.num_ineq() > 0 {
            stat += qp.a().transpose() * lambda;
        }
        if qp.num_eq() > 0 {
            stat += qp.g().transpose() * nu;
        }
        let resid = if qp.n() == 0 {
            0.0
        } else {
            stat.abs().max() / (1.0 + qp.c().abs().max())
        };
        if resid > 1e-6 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-qp.b().dot(lambda) - qp.h().dot(nu))
    } else {
        let dual = build_dual_qp(qp)?;
        let folded = dual.fold_multipliers(lambda, nu)?;
        dual.value(&folded)
    }
}

/// `f(x) - g(lambda, nu)`: how far the point and multipliers are from
/// closing the duality gap. Nonnegative for any feasible `x` and
/// sign-feasible multipliers; zero exactly at a primal/dual optimal pair.
pub fn duality_gap(
    qp: &CanonicalQp,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<f64, DualizeError> {
    if x.len() != qp.n() {
        return Err(DualizeError::DimensionMismatch {
            what: "x",
            expected: qp.n(),
            found: x.len(),
        });
    }
    let violation = qp.max_violation(x);
    if violation > 1e-6 {
        return Err(DualizeError::InfeasiblePoint { violation });
    }
    Ok(qp.objective(x) - dual_value(qp, lambda, nu)?)
}

fn check_lengths(
    qp: &CanonicalQp,
    lambda: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<(), DualizeError> {
    if lambda.len() != qp.num_ineq() {
        return Err(DualizeError::DimensionMismatch {
            what: "lambda",
            expected: qp.num_ineq(),
            found: lambda.len(),
        });
    }
    if nu.len() != qp.num_eq() {
        return Err(DualizeError::DimensionMismatch {
            what: "nu",
            expected: qp.num_eq(),
            found: nu.len(),
        });
    }
    Ok(())
}

fn check_signs(lambda: &DVector<f64>) -> Result<(), DualizeError> {
    for (i, &v) in lambda.iter().enumerate() {
        if v < -MULTIPLIER_TOL {
            return Err(DualizeError::NegativeMultiplier { index: i, value: v });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compile_dispatch, parse_case};
    use crate::verify::vertex_oracle;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn one_dim() -> CanonicalQp {
        // min x^2 - 4x s.t. x <= 1: optimum -3 at x = 1 with multiplier 2.
        build_qp(
            dmatrix![2.0],
            dvector![-4.0],
            dmatrix![1.0],
            dvector![1.0],
            DMatrix::zeros(0, 1),
            DVector::zeros(0),
            Sense::Minimize,
        )
        .unwrap()
    }

    #[test]
    fn one_dim_dual_data() {
        let dual = build_dual_qp(&one_dim()).unwrap();
        assert_eq!(dual.num_multipliers(), 1);
        assert_relative_eq!(dual.p()[(0, 0)], 0.5);
        assert_relative_eq!(dual.t()[0], -1.0);
        assert_relative_eq!(dual.constant(), 4.0);
    }

    #[test]
    fn one_dim_dual_values_and_recovery() {
        let dual = build_dual_qp(&one_dim()).unwrap();
        // g(0) = -4: the unconstrained minimum of the objective.
        assert_relative_eq!(dual.value(&dvector![0.0]).unwrap(), -4.0);
        // g at the optimal multiplier equals the primal optimum.
        assert_relative_eq!(dual.value(&dvector![2.0]).unwrap(), -3.0);
        // Recovery: x(2) = 1 is the constrained optimum, x(0) = 2 the free one.
        assert_relative_eq!(dual.recover_primal(&dvector![2.0]).unwrap()[0], 1.0);
        assert_relative_eq!(dual.recover_primal(&dvector![0.0]).unwrap()[0], 2.0);
    }

    #[test]
    fn loosened_bound_shifts_t_only() {
        let qp = build_qp(
            dmatrix![2.0],
            dvector![-4.0],
            dmatrix![1.0],
            dvector![5.0],
            DMatrix::zeros(0, 1),
            DVector::zeros(0),
            Sense::Minimize,
        )
        .unwrap();
        let dual = build_dual_qp(&qp).unwrap();
        assert_relative_eq!(dual.p()[(0, 0)], 0.5);
        assert_relative_eq!(dual.t()[0], 3.0);
        // With x <= 5 slack at the free minimum, the bound's multiplier is 0
        // and the dual peaks at the unconstrained optimum.
        assert_relative_eq!(dual.value(&dvector![0.0]).unwrap(), -4.0);
    }

    #[test]
    fn equality_rows_fold_into_pairs() {
        // min x^2 - 4x s.t. x = 1 (forced): optimum -3.
        let qp = build_qp(
            dmatrix![2.0],
            dvector![-4.0],
            DMatrix::zeros(0, 1),
            DVector::zeros(0),
            dmatrix![1.0],
            dvector![1.0],
            Sense::Minimize,
        )
        .unwrap();
        let dual = build_dual_qp(&qp).unwrap();
        assert_eq!(dual.num_multipliers(), 2);
        // Multiplier nu = 2 splits into (2, 0).
        assert_relative_eq!(dual.value(&dvector![2.0, 0.0]).unwrap(), -3.0);
        // Both P and t see the pair only through its difference, so any
        // shift along (1, 1) leaves the value alone.
        assert_relative_eq!(dual.value(&dvector![3.0, 1.0]).unwrap(), -3.0);
        let labels = dual.folded_row_labels(&RowMap::synthetic(1, 0, 1));
        assert_eq!(labels, vec!["eq[0][+]".to_string(), "eq[0][-]".to_string()]);
    }

    #[test]
    fn weak_duality_at_arbitrary_multipliers() {
        let dual = build_dual_qp(&one_dim()).unwrap();
        for y in [0.0, 0.5, 1.0, 2.0, 3.0, 10.0] {
            assert!(dual.value(&dvector![y]).unwrap() <= -3.0 + 1e-12);
        }
    }

    #[test]
    fn rejects_sign_infeasible_multipliers() {
        let dual = build_dual_qp(&one_dim()).unwrap();
        assert!(matches!(
            dual.value(&dvector![-0.5]),
            Err(DualizeError::NegativeMultiplier { index: 0, .. })
        ));
        assert!(matches!(
            dual.value(&dvector![1.0, 1.0]),
            Err(DualizeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn linear_programs_are_refused_the_closed_form() {
        let case = parse_case(crate::model::fixtures::WIDGET).unwrap();
        let compiled = compile_dispatch(&case).unwrap();
        let err = build_dual_qp(&compiled.qp).unwrap_err();
        assert!(matches!(err, DualizeError::NotStrictlyConvex { .. }));
        assert!(err.to_string().contains("linear dual"));
    }

    #[test]
    fn dual_program_shape() {
        let dual = build_dual_qp(&one_dim()).unwrap();
        let qp = dual.to_qp();
        assert_eq!(qp.n(), 1);
        assert_eq!(qp.num_ineq(), 1);
        assert_eq!(qp.num_eq(), 0);
        assert_relative_eq!(qp.q()[(0, 0)], 0.5);
        assert_relative_eq!(qp.c()[0], -1.0);
        // y >= 0 written as -y <= 0.
        assert_relative_eq!(qp.a()[(0, 0)], -1.0);
        assert_relative_eq!(qp.b()[0], 0.0);
        // Mapping the dual optimum back: min value is -1 at y = 2.
        assert_relative_eq!(dual.primal_bound(-1.0), -3.0);
    }

    #[test]
    fn widget_lp_dual_solves_to_negated_optimum() {
        let case = parse_case(crate::model::fixtures::WIDGET).unwrap();
        let compiled = compile_dispatch(&case).unwrap();
        let dual = lp_dual(&compiled.qp, Some(&compiled.rows)).unwrap();

        assert_eq!(dual.qp.n(), 4); // three lambda, one nu
        assert_eq!(dual.qp.num_ineq(), 3);
        assert_eq!(dual.qp.num_eq(), 2);
        assert_eq!(dual.rows.var_labels()[0], "lambda[gen_lb[G1]]");
        assert_eq!(dual.rows.var_labels()[3], "nu[balance[bus1]]");
        assert_eq!(dual.rows.eq_labels()[0], "stationarity[pg[G1]]");
        assert_eq!(dual.rows.ineq_labels()[0], "nonneg[gen_lb[G1]]");

        let sol = vertex_oracle(&dual.qp).unwrap();
        // Primal optimum is -30; the dual's minimize form lands at +30.
        assert_relative_eq!(sol.objective, 30.0, epsilon = 1e-8);
        // The optimal dual point is the primal's multiplier vector.
        assert_relative_eq!(sol.x[2], 3.0, epsilon = 1e-8); // lambda[load_ub[L1]]
        assert_relative_eq!(sol.x[3], 5.0, epsilon = 1e-8); // nu[balance[bus1]]
    }

    #[test]
    fn lp_dual_applied_twice_restores_the_optimum() {
        let case = parse_case(crate::model::fixtures::WIDGET).unwrap();
        let compiled = compile_dispatch(&case).unwrap();
        let dual = lp_dual(&compiled.qp, Some(&compiled.rows)).unwrap();
        let double = lp_dual(&dual.qp, Some(&dual.rows)).unwrap();
        let sol = vertex_oracle(&double.qp).unwrap();
        assert_relative_eq!(sol.objective, -30.0, epsilon = 1e-8);
        // Labels nest: the double dual prices the dual's stationarity rows.
        assert!(double
            .rows
            .var_labels()
            .iter()
            .any(|l| l == "nu[stationarity[pg[G1]]]"));
    }

    #[test]
    fn lp_dual_rejects_quadratics() {
        assert!(matches!(
            lp_dual(&one_dim(), None),
            Err(DualizeError::NotLinear { .. })
        ));
    }

    #[test]
    fn dual_value_and_gap_for_linear_programs() {
        let case = parse_case(crate::model::fixtures::WIDGET).unwrap();
        let compiled = compile_dispatch(&case).unwrap();
        let qp = &compiled.qp;
        // Optimal multipliers: tight bound.
        let g = dual_value(qp, &dvector![0.0, 0.0, 3.0], &dvector![5.0]).unwrap();
        assert_relative_eq!(g, -30.0, epsilon = 1e-9);
        let gap = duality_gap(qp, &dvector![10.0, 10.0], &dvector![0.0, 0.0, 3.0], &dvector![5.0])
            .unwrap();
        assert_relative_eq!(gap, 0.0, epsilon = 1e-9);
        // Multipliers that miss stationarity certify nothing.
        let g = dual_value(qp, &dvector![0.0, 0.0, 0.0], &dvector![0.0]).unwrap();
        assert_eq!(g, f64::NEG_INFINITY);
        // Feasible but suboptimal point: positive gap.
        let gap = duality_gap(qp, &dvector![1.0, 1.0], &dvector![0.0, 0.0, 3.0], &dvector![5.0])
            .unwrap();
        assert_relative_eq!(gap, 27.0, epsilon = 1e-9);
        // Infeasible points are refused.
        assert!(matches!(
            duality_gap(qp, &dvector![0.0, 11.0], &dvector![0.0, 0.0, 3.0], &dvector![5.0]),
            Err(DualizeError::InfeasiblePoint { .. })
        ));
    }

    #[test]
    fn dual_value_closed_form_matches_by_hand() {
        let qp = one_dim();
        let g = dual_value(&qp, &dvector![2.0], &DVector::zeros(0)).unwrap();
        assert_relative_eq!(g, -3.0);
        let gap = duality_gap(&qp, &dvector![1.0], &dvector![2.0], &DVector::zeros(0)).unwrap();
        assert_relative_eq!(gap, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn solved_dual_bounds_and_recovers_the_primal() {
        let qp = one_dim();
        let dual = build_dual_qp(&qp).unwrap();
        let dsol = solve_dual_qp(&dual, &SolverOptions::with_tolerance(1e-10));
        assert_eq!(dsol.status, crate::solver::SolveStatus::Optimal);
        assert_relative_eq!(dsol.objective, -1.0, epsilon = 1e-7);
        // The multiplier matches the primal solve, the bound is tight, and
        // the recovered minimizer is the primal one.
        assert_relative_eq!(dsol.x[0], 2.0, epsilon = 1e-6);
        assert_relative_eq!(dual.primal_bound(dsol.objective), -3.0, epsilon = 1e-7);
        let x = dual.recover_primal(&dsol.x).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(dual.value(&dsol.x).unwrap(), -3.0, epsilon = 1e-7);
    }

    #[test]
    fn interior_point_and_oracle_agree_on_the_dual_program() {
        // The iterative solver lands where the enumeration oracle does, and
        // the point it returns certifies the primal optimum through
        // `dual_value`.
        let case = parse_case(crate::model::fixtures::WIDGET).unwrap();
        let compiled = compile_dispatch(&case).unwrap();
        let dual = lp_dual(&compiled.qp, Some(&compiled.rows)).unwrap();
        let dsol = solve(&dual.qp, &SolverOptions::with_tolerance(1e-10));
        assert_eq!(dsol.status, crate::solver::SolveStatus::Optimal);
        let vsol = vertex_oracle(&dual.qp).unwrap();
        assert_relative_eq!(dsol.objective, vsol.objective, epsilon = 1e-7);
        assert_relative_eq!(dsol.x, vsol.x, epsilon = 1e-6);
        let g = dual_value(
            &compiled.qp,
            &dsol.x.rows(0, 3).into_owned(),
            &dsol.x.rows(3, 1).into_owned(),
        )
        .unwrap();
        assert_relative_eq!(g, -30.0, epsilon = 1e-6);
    }
}

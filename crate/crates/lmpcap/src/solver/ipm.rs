//! Predictor-corrector interior-point iteration.
//!
//! The main path handles programs with at least one inequality row. Slacks
//! `s = b - Ax` and multipliers `lambda` are kept strictly positive; each
//! iteration eliminates `(ds, dlambda)` from the Newton system and solves the
//! reduced saddle-point system
//!
//! ```text
//! [ Q + A' D A + dI   G' ] [dx ]   [ rhs_x ]
//! [ G                -dI ] [dnu] = [ -r_e  ]
//! ```
//!
//! with `D = diag(lambda/s)` and a small static regularization `d` that makes
//! the matrix quasi-definite, so the LDL^T factorization in [`super::linsys`]
//! never needs to pivot. The regularization error is removed afterwards by
//! iterative refinement against the unregularized matrix. Programs with no
//! inequality rows take closed-form routes instead: a symmetric eigensolve
//! when fully unconstrained, a single saddle-point solve when only equality
//! rows are present.
//!
//! A converged iterate still carries the centering offset of the final
//! barrier parameter, so a last polish step re-solves the program on the
//! guessed active face and keeps the result only when the audit residuals
//! do not get worse. That snaps clean geometry to machine precision without
//! risking anything on a wrong guess.

use nalgebra::{DMatrix, DVector};

use super::linsys::{self, LdlFactor};
use super::{KktSummary, Solution, SolveStatus, SolverOptions};
use crate::model::CanonicalQp;

// Static regularization schedule: start small, bump tenfold on a failed
// factorization, give up past the ceiling.
const DELTA_START: f64 = 1e-8;
const DELTA_MAX: f64 = 1e-4;
// Clip on the slack scaling so boundary iterates keep the system finite.
const D_MIN: f64 = 1e-16;
const D_MAX: f64 = 1e16;
// Fraction-to-boundary factor for the combined step.
const STEP_FRACTION: f64 = 0.995;

pub(super) fn run(qp: &CanonicalQp, options: &SolverOptions) -> Solution {
    let (n, mi, me) = (qp.n(), qp.num_ineq(), qp.num_eq());
    if n == 0 {
        constant_program(qp, options)
    } else if mi == 0 && me == 0 {
        unconstrained(qp)
    } else if mi == 0 {
        equality_constrained(qp, options)
    } else {
        interior_point(qp, options)
    }
}

/// Build the returned solution, recomputing objective and residual summary
/// from the final iterate.
fn finish(
    qp: &CanonicalQp,
    x: DVector<f64>,
    lambda: DVector<f64>,
    nu: DVector<f64>,
    status: SolveStatus,
    iterations: usize,
    note: Option<String>,
) -> Solution {
    let objective = qp.objective(&x);
    let kkt = summarize(qp, &x, &lambda, &nu, objective);
    Solution {
        x,
        lambda,
        nu,
        status,
        objective,
        kkt,
        iterations,
        note,
    }
}

// Same scaled aggregates the residual audit recomputes, so "solver says
// optimal" and "audit passes at the same tolerance" agree.
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

/// No variables at all: every row is a constant, so the program is optimal
/// exactly when those constants are feasible.
fn constant_program(qp: &CanonicalQp, options: &SolverOptions) -> Solution {
    let x = DVector::zeros(0);
    let lambda = DVector::zeros(qp.num_ineq());
    let nu = DVector::zeros(qp.num_eq());
    let status = if qp.max_violation(&x) <= options.tolerance {
        SolveStatus::Optimal
    } else {
        SolveStatus::PrimalInfeasible
    };
    finish(qp, x, lambda, nu, status, 0, None)
}

/// No rows: minimize by spectral solve of `Qx = -c`, flagging descent along
/// any flat eigendirection the linear term can see.
fn unconstrained(qp: &CanonicalQp) -> Solution {
    let n = qp.n();
    let eig = nalgebra::SymmetricEigen::new(qp.q().clone());
    let cutoff = 1e-10 * eig.eigenvalues.abs().max().max(1.0);
    let linear_floor = 1e-10 * (1.0 + qp.c().abs().max());
    let target = -qp.c();
    let mut x = DVector::zeros(n);
    let mut unbounded = false;
    for k in 0..n {
        let u = eig.eigenvectors.column(k);
        let w = u.dot(&target);
        if eig.eigenvalues[k] > cutoff {
            x += u * (w / eig.eigenvalues[k]);
        } else if w.abs() > linear_floor {
            // Flat curvature but nonzero slope: the objective is affine and
            // decreasing along this eigenvector.
            unbounded = true;
        }
    }
    if unbounded {
        return finish(
            qp,
            DVector::zeros(n),
            DVector::zeros(0),
            DVector::zeros(0),
            SolveStatus::Unbounded,
            0,
            None,
        );
    }
    finish(
        qp,
        x,
        DVector::zeros(0),
        DVector::zeros(0),
        SolveStatus::Optimal,
        0,
        None,
    )
}

/// Equality rows only: one saddle-point solve. Large equality residuals
/// afterwards mean `Gx = h` is inconsistent; large stationarity residuals
/// mean the objective slides along the feasible affine set.
fn equality_constrained(qp: &CanonicalQp, options: &SolverOptions) -> Solution {
    let (n, me) = (qp.n(), qp.num_eq());
    let dim = n + me;
    let mut k0 = DMatrix::<f64>::zeros(dim, dim);
    k0.view_mut((0, 0), (n, n)).copy_from(qp.q());
    k0.view_mut((0, n), (n, me)).copy_from(&qp.g().transpose());
    k0.view_mut((n, 0), (me, n)).copy_from(qp.g());
    let mut rhs = DVector::<f64>::zeros(dim);
    rhs.rows_mut(0, n).copy_from(&(-qp.c()));
    rhs.rows_mut(n, me).copy_from(qp.h());

    let mut delta = DELTA_START;
    let fact = match factor_bumped(&k0, n, &mut delta) {
        Some(f) => f,
        None => {
            return finish(
                qp,
                DVector::zeros(n),
                DVector::zeros(0),
                DVector::zeros(me),
                SolveStatus::IterationLimit,
                0,
                Some("factorization failed at maximum regularization".into()),
            );
        }
    };
    let sol = refine(&fact, &k0, &rhs);
    let x = sol.rows(0, n).into_owned();
    let nu = sol.rows(n, me).into_owned();

    let eq_scaled = qp.max_violation(&x);
    let stat = qp.q() * &x + qp.c() + qp.g().transpose() * &nu;
    let stat_scaled = stat.abs().max() / (1.0 + qp.c().abs().max());
    let status = if eq_scaled > options.tolerance {
        SolveStatus::PrimalInfeasible
    } else if stat_scaled > options.tolerance {
        SolveStatus::Unbounded
    } else {
        SolveStatus::Optimal
    };
    finish(qp, x, DVector::zeros(0), nu, status, 1, None)
}

/// Factor `k0` plus a `+delta/-delta` split diagonal shift, bumping `delta`
/// tenfold until the factorization holds or the ceiling is passed.
fn factor_bumped(k0: &DMatrix<f64>, nx: usize, delta: &mut f64) -> Option<LdlFactor> {
    let dim = k0.nrows();
    loop {
        let mut k = k0.clone();
        for j in 0..dim {
            k[(j, j)] += if j < nx { *delta } else { -*delta };
        }
        if let Some(f) = linsys::factor(&k, 0.1 * *delta) {
            return Some(f);
        }
        *delta *= 10.0;
        if *delta > DELTA_MAX {
            return None;
        }
    }
}

/// Solve against the factored regularized matrix, then take up to three
/// refinement steps measured against the unregularized matrix, keeping each
/// correction only while it improves the residual.
fn refine(fact: &LdlFactor, k0: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let mut sol = fact.solve(rhs);
    let mut res = rhs - k0 * &sol;
    let mut best = res.abs().max();
    let stop = 1e-14 * (1.0 + rhs.abs().max());
    for _ in 0..3 {
        if !best.is_finite() || best <= stop {
            break;
        }
        let cand = &sol + fact.solve(&res);
        let cres = rhs - k0 * &cand;
        let cbest = cres.abs().max();
        if cbest < best {
            sol = cand;
            res = cres;
            best = cbest;
        } else {
            break;
        }
    }
    sol
}

/// Largest step in `[0, inf)` keeping `v + alpha*dv` nonnegative.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut alpha = f64::INFINITY;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            alpha = alpha.min(-v[i] / dv[i]);
        }
    }
    alpha
}

fn interior_point(qp: &CanonicalQp, options: &SolverOptions) -> Solution {
    let (n, mi, me) = (qp.n(), qp.num_ineq(), qp.num_eq());
    let q = qp.q();
    let a = qp.a();
    let g = qp.g();
    let b = qp.b();
    let c = qp.c();
    let h = qp.h();
    let at = a.transpose();
    let gt = g.transpose();
    let b_scale = 1.0 + b.abs().max();

    // Cold start: the origin, with slacks and multipliers at the data scale.
    let mut tau = 1.0f64.max(b.abs().max()).max(c.abs().max());
    if me > 0 {
        tau = tau.max(h.abs().max());
    }
    let mut x = DVector::<f64>::zeros(n);
    let mut nu = DVector::<f64>::zeros(me);
    let mut s = DVector::<f64>::from_element(mi, tau);
    let mut lam = DVector::<f64>::from_element(mi, tau);

    let mut delta = DELTA_START;
    let mut prev_obj = f64::INFINITY;
    let mut status = SolveStatus::IterationLimit;
    let mut note: Option<String> = None;
    let mut iterations = options.max_iterations;

    for iter in 0..options.max_iterations {
        let obj = qp.objective(&x);
        let summary = summarize(qp, &x, &lam, &nu, obj);
        let r_p = a * &x + &s - b;
        if summary.max() <= options.tolerance && r_p.abs().max() / b_scale <= options.tolerance {
            status = SolveStatus::Optimal;
            iterations = iter;
            break;
        }

        let finite = x.iter().all(|v| v.is_finite())
            && s.iter().all(|v| v.is_finite())
            && lam.iter().all(|v| v.is_finite())
            && nu.iter().all(|v| v.is_finite());
        if !finite {
            note = Some("numerical breakdown: non-finite iterate".into());
            iterations = iter;
            break;
        }

        // Diverging multipliers certify that no feasible point exists;
        // diverging primal iterates with a still-improving objective certify
        // an unbounded objective.
        let dual_norm = lam.abs().max().max(if me > 0 { nu.abs().max() } else { 0.0 });
        if dual_norm > options.divergence_threshold {
            status = SolveStatus::PrimalInfeasible;
            iterations = iter;
            break;
        }
        if x.abs().max() > options.divergence_threshold {
            if obj < prev_obj {
                status = SolveStatus::Unbounded;
            } else {
                note = Some("primal iterate diverged without objective improvement".into());
            }
            iterations = iter;
            break;
        }
        prev_obj = obj;

        let r_d = q * &x + c + &at * &lam + &gt * &nu;
        let r_e = g * &x - h;
        let dvec = DVector::<f64>::from_fn(mi, |i, _| (lam[i] / s[i]).clamp(D_MIN, D_MAX));

        // Reduced system: Q + A'DA over the variables, G bordering it.
        let dim = n + me;
        let mut da = a.clone_owned();
        for i in 0..mi {
            let scale = dvec[i];
            for j in 0..n {
                da[(i, j)] *= scale;
            }
        }
        let mut k0 = DMatrix::<f64>::zeros(dim, dim);
        k0.view_mut((0, 0), (n, n)).copy_from(&(q + &at * &da));
        if me > 0 {
            k0.view_mut((0, n), (n, me)).copy_from(&gt);
            k0.view_mut((n, 0), (me, n)).copy_from(g);
        }
        let fact = match factor_bumped(&k0, n, &mut delta) {
            Some(f) => f,
            None => {
                note = Some("factorization failed at maximum regularization".into());
                iterations = iter;
                break;
            }
        };

        // Affine scaling step: complementarity right-hand side S Lambda e.
        let mut rhs = DVector::<f64>::zeros(dim);
        let t_aff = DVector::<f64>::from_fn(mi, |i, _| lam[i] - dvec[i] * r_p[i]);
        rhs.rows_mut(0, n).copy_from(&(-&r_d + &at * &t_aff));
        if me > 0 {
            rhs.rows_mut(n, me).copy_from(&(-&r_e));
        }
        let aff = refine(&fact, &k0, &rhs);
        let dx_aff = aff.rows(0, n).into_owned();
        let ds_aff = -&r_p - a * &dx_aff;
        let dlam_aff = DVector::<f64>::from_fn(mi, |i, _| -lam[i] - dvec[i] * ds_aff[i]);

        let alpha_aff_p = max_step(&s, &ds_aff).min(1.0);
        let alpha_aff_d = max_step(&lam, &dlam_aff).min(1.0);
        let mu = lam.dot(&s) / mi as f64;
        let mu_aff = (&s + alpha_aff_p * &ds_aff).dot(&(&lam + alpha_aff_d * &dlam_aff)) / mi as f64;
        let sigma = if mu > 0.0 {
            ((mu_aff / mu).max(0.0)).powi(3).min(1.0)
        } else {
            0.0
        };

        // Corrected step: recenter toward sigma*mu and absorb the
        // second-order term from the affine direction.
        let w = DVector::<f64>::from_fn(mi, |i, _| {
            lam[i] + (ds_aff[i] * dlam_aff[i] - sigma * mu) / s[i]
        });
        let t_cc = DVector::<f64>::from_fn(mi, |i, _| w[i] - dvec[i] * r_p[i]);
        rhs.rows_mut(0, n).copy_from(&(-&r_d + &at * &t_cc));
        let cc = refine(&fact, &k0, &rhs);
        let dx = cc.rows(0, n).into_owned();
        let dnu = cc.rows(n, me).into_owned();
        let ds = -&r_p - a * &dx;
        let dlam = DVector::<f64>::from_fn(mi, |i, _| -w[i] - dvec[i] * ds[i]);

        let alpha_p = (STEP_FRACTION * max_step(&s, &ds)).min(1.0);
        let alpha_d = (STEP_FRACTION * max_step(&lam, &dlam)).min(1.0);
        x += alpha_p * &dx;
        s += alpha_p * &ds;
        lam += alpha_d * &dlam;
        nu += alpha_d * &dnu;
    }

    // A converged iterate still carries its final centering offset, and a
    // breakdown near the boundary (the slack scaling saturates and the
    // system stops factoring) can stop the loop within sight of the answer.
    // The face solve either sharpens the point or changes nothing, and a
    // sharpened point that audits clean at the requested tolerance is a
    // valid optimum no matter how the loop ended.
    if matches!(status, SolveStatus::Optimal | SolveStatus::IterationLimit) {
        if let Some((px, plam, pnu)) = polish(qp, &x, &lam) {
            let before = summarize(qp, &x, &lam, &nu, qp.objective(&x));
            let after = summarize(qp, &px, &plam, &pnu, qp.objective(&px));
            if after.max() <= before.max() {
                x = px;
                lam = plam;
                nu = pnu;
                if status == SolveStatus::IterationLimit && after.max() <= options.tolerance {
                    status = SolveStatus::Optimal;
                    note = None;
                }
            }
        }
    }

    finish(qp, x, lam, nu, status, iterations, note)
}

/// Re-solve on the active face a converged iterate points at: rows whose
/// multiplier dominates their slack are taken as exactly active and one
/// saddle-point solve recomputes the point with its multipliers. Rows whose
/// recomputed multiplier comes back negative are dropped and the solve is
/// retried, since the iterate only guessed at the face. Returns `None`
/// whenever no clean face emerges; the caller then keeps the iterate.
fn polish(
    qp: &CanonicalQp,
    x: &DVector<f64>,
    lam: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let (n, mi, me) = (qp.n(), qp.num_ineq(), qp.num_eq());
    let s = qp.ineq_slack(x);
    let mut active: Vec<usize> = (0..mi).filter(|&i| lam[i] > s[i]).collect();
    for _ in 0..3 {
        let ma = active.len();
        let dim = n + ma + me;
        let mut k0 = DMatrix::<f64>::zeros(dim, dim);
        k0.view_mut((0, 0), (n, n)).copy_from(qp.q());
        for (r, &i) in active.iter().enumerate() {
            for j in 0..n {
                k0[(n + r, j)] = qp.a()[(i, j)];
                k0[(j, n + r)] = qp.a()[(i, j)];
            }
        }
        if me > 0 {
            k0.view_mut((0, n + ma), (n, me))
                .copy_from(&qp.g().transpose());
            k0.view_mut((n + ma, 0), (me, n)).copy_from(qp.g());
        }
        let mut rhs = DVector::<f64>::zeros(dim);
        rhs.rows_mut(0, n).copy_from(&(-qp.c()));
        for (r, &i) in active.iter().enumerate() {
            rhs[n + r] = qp.b()[i];
        }
        if me > 0 {
            rhs.rows_mut(n + ma, me).copy_from(qp.h());
        }
        let mut delta = DELTA_START;
        let fact = factor_bumped(&k0, n, &mut delta)?;
        let sol = refine(&fact, &k0, &rhs);

        let dropped: Vec<usize> = active
            .iter()
            .enumerate()
            .filter(|&(r, _)| sol[n + r] < -1e-9)
            .map(|(_, &i)| i)
            .collect();
        if dropped.is_empty() {
            let px = sol.rows(0, n).into_owned();
            let mut plam = DVector::<f64>::zeros(mi);
            for (r, &i) in active.iter().enumerate() {
                plam[i] = sol[n + r];
            }
            let pnu = sol.rows(n + ma, me).into_owned();
            return Some((px, plam, pnu));
        }
        active.retain(|i| !dropped.contains(i));
    }
    None
}

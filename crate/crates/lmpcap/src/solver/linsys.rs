//! Dense LDL^T factorization for the reduced KKT system.
//!
//! The matrices that reach this module are symmetric quasi-definite by
//! construction (positive diagonal block for the variables, negative for the
//! equality multipliers), so the factorization exists without pivoting and
//! the elimination order never has to be permuted — which keeps solves
//! bitwise reproducible.

use nalgebra::{DMatrix, DVector};

/// Unit lower-triangular factor and diagonal of `K = L D L^T`.
pub(super) struct LdlFactor {
    l: DMatrix<f64>,
    d: DVector<f64>,
}

/// Factor a symmetric matrix without pivoting.
///
/// Returns `None` when a pivot falls below `pivot_floor` in magnitude or
/// turns non-finite; the caller reacts by raising its regularization and
/// trying again.
pub(super) fn factor(k: &DMatrix<f64>, pivot_floor: f64) -> Option<LdlFactor> {
    let n = k.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut d = DVector::<f64>::zeros(n);
    for j in 0..n {
        // d_j = K_jj - sum_k l_jk^2 d_k
        let mut dj = k[(j, j)];
        for p in 0..j {
            dj -= l[(j, p)] * l[(j, p)] * d[p];
        }
        if !dj.is_finite() || dj.abs() < pivot_floor {
            return None;
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut v = k[(i, j)];
            for p in 0..j {
                v -= l[(i, p)] * l[(j, p)] * d[p];
            }
            l[(i, j)] = v / dj;
        }
    }
    Some(LdlFactor { l, d })
}

impl LdlFactor {
    /// Solve `K z = rhs` by forward substitution, diagonal scaling, and back
    /// substitution.
    pub(super) fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.d.len();
        let mut z = rhs.clone();
        for i in 0..n {
            let mut v = z[i];
            for j in 0..i {
                v -= self.l[(i, j)] * z[j];
            }
            z[i] = v;
        }
        for i in 0..n {
            z[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut v = z[i];
            for j in (i + 1)..n {
                v -= self.l[(j, i)] * z[j];
            }
            z[i] = v;
        }
        z
    }
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Largest element-wise asymmetry `|Q[i,j] - Q[j,i]|` accepted by [`build_qp`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Smallest eigenvalue of `Q` accepted by [`build_qp`].
pub const PSD_TOL: f64 = -1e-10;

/// Direction the problem was originally stated in.
///
/// Storage is always the minimization form; `Maximize` only records that
/// objective values should be negated for display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "min")]
    Minimize,
    #[serde(rename = "max")]
    Maximize,
}

/// The canonical program `min 1/2 x'Qx + c'x  s.t.  Ax <= b, Gx = h`.
///
/// Construction goes through [`build_qp`], which validates dimensions and
/// finiteness, symmetrizes `Q`, and rejects indefinite `Q`. Instances are
/// immutable afterwards; transformations (dualization, capping) build new
/// programs.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalQp {
    q: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    sense: Sense,
    fingerprint: u64,
}

/// Build a canonical program, enforcing the data invariants.
///
/// `q` must be square with side `c.len()`, symmetric within [`SYMMETRY_TOL`]
/// (it is averaged with its transpose on acceptance), and positive
/// semidefinite within [`PSD_TOL`]. `a`/`b` and `g`/`h` must agree in row
/// count and have `c.len()` columns; either block may be empty. All entries
/// must be finite. `sense` records how objective values are reported — the
/// stored data is always the minimization form, so a caller with a
/// maximization problem negates its objective first and tags it `Maximize`.
pub fn build_qp(
    q: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    sense: Sense,
) -> Result<CanonicalQp, ModelError> {
    let n = c.len();
    if q.nrows() != n || q.ncols() != n {
        return Err(ModelError::DimensionMismatch {
            what: "Q (rows and columns must equal the length of c)",
            expected: n,
            found: q.nrows().max(q.ncols()),
        });
    }
    if a.ncols() != n && a.nrows() > 0 {
        return Err(ModelError::DimensionMismatch {
            what: "A columns",
            expected: n,
            found: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(ModelError::DimensionMismatch {
            what: "b (one entry per row of A)",
            expected: a.nrows(),
            found: b.len(),
        });
    }
    if g.ncols() != n && g.nrows() > 0 {
        return Err(ModelError::DimensionMismatch {
            what: "G columns",
            expected: n,
            found: g.ncols(),
        });
    }
    if h.len() != g.nrows() {
        return Err(ModelError::DimensionMismatch {
            what: "h (one entry per row of G)",
            expected: g.nrows(),
            found: h.len(),
        });
    }

    for (what, ok) in [
        ("Q", q.iter().all(|v| v.is_finite())),
        ("c", c.iter().all(|v| v.is_finite())),
        ("A", a.iter().all(|v| v.is_finite())),
        ("b", b.iter().all(|v| v.is_finite())),
        ("G", g.iter().all(|v| v.is_finite())),
        ("h", h.iter().all(|v| v.is_finite())),
    ] {
        if !ok {
            return Err(ModelError::NonFinite { what });
        }
    }

    for i in 0..n {
        for j in (i + 1)..n {
            let delta = (q[(i, j)] - q[(j, i)]).abs();
            if delta > SYMMETRY_TOL {
                return Err(ModelError::NotSymmetric { i, j, delta });
            }
        }
    }
    let q = (&q + q.transpose()) * 0.5;

    if n > 0 {
        let min_eig = q
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &e| m.min(e));
        if min_eig < PSD_TOL {
            return Err(ModelError::NotPsd {
                min_eigenvalue: min_eig,
            });
        }
    }

    // Normalize empty blocks so downstream code can rely on column counts.
    let a = if a.nrows() == 0 {
        DMatrix::zeros(0, n)
    } else {
        a
    };
    let g = if g.nrows() == 0 {
        DMatrix::zeros(0, n)
    } else {
        g
    };

    let fingerprint = fingerprint(&q, &c, &a, &b, &g, &h, sense);
    Ok(CanonicalQp {
        q,
        c,
        a,
        b,
        g,
        h,
        sense,
        fingerprint,
    })
}

impl CanonicalQp {
    /// Convenience constructor for linear programs (`Q = 0`).
    pub fn linear(
        c: DVector<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
        g: DMatrix<f64>,
        h: DVector<f64>,
        sense: Sense,
    ) -> Result<Self, ModelError> {
        let n = c.len();
        build_qp(DMatrix::zeros(n, n), c, a, b, g, h, sense)
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_eq(&self) -> usize {
        self.g.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn h(&self) -> &DVector<f64> {
        &self.h
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Content hash of the program data; used as a back-reference by derived
    /// objects. Deterministic across runs.
    pub fn id(&self) -> u64 {
        self.fingerprint
    }

    /// `true` when `Q` is exactly zero.
    pub fn is_linear(&self) -> bool {
        self.q.iter().all(|&v| v == 0.0)
    }

    /// Objective value `1/2 x'Qx + c'x` in the stored (minimization) form.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.q * x).dot(x) + self.c.dot(x)
    }

    /// A stored objective value converted to the declared sense.
    pub fn display_objective(&self, stored: f64) -> f64 {
        match self.sense {
            Sense::Minimize => stored,
            Sense::Maximize => -stored,
        }
    }

    /// Inequality slack `b - Ax` (nonnegative at feasible points).
    pub fn ineq_slack(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.b - &self.a * x
    }

    /// Equality residual `Gx - h`.
    pub fn eq_residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.g * x - &self.h
    }

    /// Worst constraint violation at `x`, scaled per row by `1 + |rhs|`.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        let slack = self.ineq_slack(x);
        for i in 0..slack.len() {
            worst = worst.max((-slack[i]) / (1.0 + self.b[i].abs()));
        }
        let resid = self.eq_residual(x);
        for i in 0..resid.len() {
            worst = worst.max(resid[i].abs() / (1.0 + self.h[i].abs()));
        }
        worst
    }
}

// FNV-1a over the raw bits; gives derived objects a stable reference to their
// source without relying on the randomly keyed std hasher.
fn fingerprint(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    sense: Sense,
) -> u64 {
    let mut acc: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &byte in bytes {
            acc ^= byte as u64;
            acc = acc.wrapping_mul(0x100_0000_01b3);
        }
    };
    for dim in [c.len(), a.nrows(), g.nrows()] {
        eat(&(dim as u64).to_le_bytes());
    }
    for value in q
        .iter()
        .chain(c.iter())
        .chain(a.iter())
        .chain(b.iter())
        .chain(g.iter())
        .chain(h.iter())
    {
        eat(&value.to_bits().to_le_bytes());
    }
    eat(&[match sense {
        Sense::Minimize => 0u8,
        Sense::Maximize => 1u8,
    }]);
    acc
}

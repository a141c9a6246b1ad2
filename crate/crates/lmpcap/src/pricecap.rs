//! Price caps as a primal reformulation.
//!
//! A cap of `m` on the multiplier of a row is enforced by giving that row a
//! relief variable: the row gains a `-1` coefficient on a new nonnegative
//! variable `alpha` whose objective price is `m`. Relief relaxes the row
//! (serving less of the balance) at cost `m` per unit, so the row's
//! multiplier can never settle above `m`: stationarity for `alpha` reads
//! `m - dual - multiplier_of(alpha >= 0) = 0`, which pins `dual <= m`.
//! When the cap does not bind, `alpha` stays at zero and the program is the
//! original one.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::model::{build_qp, BusCap, CanonicalQp, RowMap, RowRef};
use crate::solver::Solution;

/// Relief above this threshold counts as a binding cap.
pub const BINDING_ALPHA: f64 = 1e-7;

/// Errors from building or reading back a capped program.
#[derive(Debug, Error)]
pub enum PriceCapError {
    #[error("no row labeled {label:?}")]
    UnknownRow { label: String },
    #[error("no balance row for bus {bus:?}")]
    UnknownBus { bus: String },
    #[error("row {label:?} is capped twice")]
    DuplicateCap { label: String },
    #[error(
        "cap {price} on inequality row {label:?} is negative, but that multiplier is never below zero"
    )]
    NegativeCapOnInequalityRow { label: String, price: f64 },
    #[error("cap on {label:?} is not finite")]
    NonFiniteCap { label: String },
    #[error("solution carries no value for {label:?}; was it solved on the capped program?")]
    MissingAlphaVariable { label: String },
}

/// What a single cap applies to.
#[derive(Debug, Clone, PartialEq)]
pub enum CapTarget {
    /// A row found by its label in the row map.
    Label(String),
    /// An inequality row by index.
    Ineq(usize),
    /// An equality row by index.
    Eq(usize),
}

/// One cap: a target row and the ceiling for its multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct CapEntry {
    pub target: CapTarget,
    pub price: f64,
}

/// An ordered collection of caps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CapSpec {
    entries: Vec<CapEntry>,
}

impl CapSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a cap; builder-style.
    pub fn cap(mut self, target: CapTarget, price: f64) -> Self {
        self.entries.push(CapEntry { target, price });
        self
    }

    pub fn entries(&self) -> &[CapEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Caps on bus prices, resolved through the balance rows of a compiled case.
pub fn bus_caps(caps: &[BusCap], rows: &RowMap) -> Result<CapSpec, PriceCapError> {
    let mut spec = CapSpec::new();
    for cap in caps {
        let row = rows
            .balance_row(&cap.bus)
            .ok_or_else(|| PriceCapError::UnknownBus {
                bus: cap.bus.clone(),
            })?;
        spec = spec.cap(CapTarget::Eq(row), cap.price);
    }
    Ok(spec)
}

/// A cap after resolution against a concrete program.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedCap {
    pub row: RowRef,
    /// Label of the capped row.
    pub label: String,
    pub price: f64,
    /// Column of this cap's relief variable in the capped program.
    pub alpha_var: usize,
}

/// The capped program, its extended row map, and the resolved caps.
#[derive(Debug, Clone)]
pub struct Capped {
    pub qp: CanonicalQp,
    pub rows: RowMap,
    pub resolved: Vec<ResolvedCap>,
}

impl Capped {
    /// The cost booked by relief variables at `x`: the sum of cap price
    /// times relief. Subtracting it from the capped objective recovers the
    /// value of the physical dispatch alone.
    pub fn relief_cost(&self, x: &DVector<f64>) -> f64 {
        self.resolved
            .iter()
            .map(|cap| cap.price * x[cap.alpha_var])
            .sum()
    }
}

/// Rebuild `qp` with one relief variable per cap in `spec`.
///
/// Each capped row gains a `-1` coefficient on its own fresh variable
/// `alpha[<row>]` with objective coefficient equal to the cap, plus a new
/// inequality row `alpha_lb[<row>]` keeping it nonnegative. Everything else
/// — including the row map's balance bookkeeping — carries over unchanged,
/// with original rows and variables at their old indices.
pub fn apply_caps(
    qp: &CanonicalQp,
    rows: &RowMap,
    spec: &CapSpec,
) -> Result<Capped, PriceCapError> {
    let (n, mi, me) = (qp.n(), qp.num_ineq(), qp.num_eq());
    let mut resolved: Vec<ResolvedCap> = Vec::with_capacity(spec.entries().len());
    for (k, entry) in spec.entries().iter().enumerate() {
        let row = match &entry.target {
            CapTarget::Label(label) => {
                rows.lookup(label).ok_or_else(|| PriceCapError::UnknownRow {
                    label: label.clone(),
                })?
            }
            CapTarget::Ineq(i) if *i < mi => RowRef::Ineq(*i),
            CapTarget::Eq(i) if *i < me => RowRef::Eq(*i),
            CapTarget::Ineq(i) => {
                return Err(PriceCapError::UnknownRow {
                    label: format!("inequality row {i}"),
                })
            }
            CapTarget::Eq(i) => {
                return Err(PriceCapError::UnknownRow {
                    label: format!("equality row {i}"),
                })
            }
        };
        let label = rows
            .row_label(row)
            .expect("resolved row has a label")
            .to_owned();
        if !entry.price.is_finite() {
            return Err(PriceCapError::NonFiniteCap { label });
        }
        if matches!(row, RowRef::Ineq(_)) && entry.price < 0.0 {
            return Err(PriceCapError::NegativeCapOnInequalityRow {
                label,
                price: entry.price,
            });
        }
        if resolved.iter().any(|r| r.row == row) {
            return Err(PriceCapError::DuplicateCap { label });
        }
        resolved.push(ResolvedCap {
            row,
            label,
            price: entry.price,
            alpha_var: n + k,
        });
    }

    let k = resolved.len();
    let mut q = DMatrix::zeros(n + k, n + k);
    q.view_mut((0, 0), (n, n)).copy_from(qp.q());
    let mut c = DVector::zeros(n + k);
    c.rows_mut(0, n).copy_from(qp.c());
    let mut a = DMatrix::zeros(mi + k, n + k);
    a.view_mut((0, 0), (mi, n)).copy_from(qp.a());
    let mut b = DVector::zeros(mi + k);
    b.rows_mut(0, mi).copy_from(qp.b());
    let mut g = DMatrix::zeros(me, n + k);
    g.view_mut((0, 0), (me, n)).copy_from(qp.g());
    let h = qp.h().clone();

    let mut var_labels = rows.var_labels().to_vec();
    let mut ineq_labels = rows.ineq_labels().to_vec();
    for cap in &resolved {
        c[cap.alpha_var] = cap.price;
        match cap.row {
            RowRef::Eq(i) => g[(i, cap.alpha_var)] = -1.0,
            RowRef::Ineq(i) => a[(i, cap.alpha_var)] = -1.0,
        }
        // alpha >= 0, as -alpha <= 0.
        let lb_row = mi + (cap.alpha_var - n);
        a[(lb_row, cap.alpha_var)] = -1.0;
        var_labels.push(format!("alpha[{}]", cap.label));
        ineq_labels.push(format!("alpha_lb[{}]", cap.label));
    }

    let qp = build_qp(q, c, a, b, g, h, qp.sense()).expect("capped program preserves validity");
    let rows = RowMap::new(
        var_labels,
        ineq_labels,
        rows.eq_labels().to_vec(),
        rows.balance_rows().to_vec(),
    )
    .expect("capped labels stay unique");
    Ok(Capped { qp, rows, resolved })
}

/// How one cap came out in a solved capped program.
#[derive(Debug, Clone, Serialize)]
pub struct CapOutcome {
    /// Label of the capped row.
    pub row: String,
    /// The cap.
    pub price: f64,
    /// Relief taken on the row.
    pub alpha: f64,
    /// Whether the cap is binding (`alpha > BINDING_ALPHA`).
    pub binding: bool,
    /// The multiplier the capped row settled at.
    pub dual: f64,
}

/// Summary of all caps in a solved capped program.
#[derive(Debug, Clone, Serialize)]
pub struct CapReport {
    pub outcomes: Vec<CapOutcome>,
    /// Total relief across caps.
    pub total_relief: f64,
    /// Objective content of relief: sum of price times relief.
    pub relief_cost: f64,
}

impl CapReport {
    pub fn any_binding(&self) -> bool {
        self.outcomes.iter().any(|o| o.binding)
    }
}

/// Read the cap outcomes out of a solution of the capped program.
pub fn interpret(capped: &Capped, sol: &Solution) -> Result<CapReport, PriceCapError> {
    let mut outcomes = Vec::with_capacity(capped.resolved.len());
    let mut total_relief = 0.0;
    let mut relief_cost = 0.0;
    for cap in &capped.resolved {
        if cap.alpha_var >= sol.x.len() {
            return Err(PriceCapError::MissingAlphaVariable {
                label: cap.label.clone(),
            });
        }
        let alpha = sol.x[cap.alpha_var];
        let dual = match cap.row {
            RowRef::Eq(i) if i < sol.nu.len() => sol.nu[i],
            RowRef::Ineq(i) if i < sol.lambda.len() => sol.lambda[i],
            _ => {
                return Err(PriceCapError::MissingAlphaVariable {
                    label: cap.label.clone(),
                })
            }
        };
        total_relief += alpha;
        relief_cost += cap.price * alpha;
        outcomes.push(CapOutcome {
            row: cap.label.clone(),
            price: cap.price,
            alpha,
            binding: alpha > BINDING_ALPHA,
            dual,
        });
    }
    Ok(CapReport {
        outcomes,
        total_relief,
        relief_cost,
    })
}

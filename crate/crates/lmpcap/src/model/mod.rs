//! Problem data: the canonical QP form, named rows and variables, dispatch
//! cases, and the compilation from a case to a canonical program.

mod canonical;
mod case;
mod compile;

pub use canonical::{build_qp, CanonicalQp, Sense, PSD_TOL, SYMMETRY_TOL};
pub use case::{
    load_case, parse_case, write_case, Bus, BusCap, DispatchCase, FixedLoad, FlexibleLoad,
    Generator, Line,
};
pub use compile::{compile_dispatch, Compiled, CompileWarning};


use serde::Serialize;
use thiserror::Error;

/// Errors from constructing or loading problem data.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("Q is not symmetric: |Q[{i},{j}] - Q[{j},{i}]| = {delta:.3e} exceeds {SYMMETRY_TOL:.0e}")]
    NotSymmetric { i: usize, j: usize, delta: f64 },
    #[error("Q is not positive semidefinite: minimum eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("non-finite entry in {what}")]
    NonFinite { what: &'static str },
    #[error("duplicate label {label:?}")]
    DuplicateLabel { label: String },
    #[error("balance bus {bus:?} does not name an equality row")]
    BadBalanceIndex { bus: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid case at {path}: {message}")]
    Schema { path: String, message: String },
}

/// A row of the canonical program: inequality rows and equality rows are
/// separate index spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowRef {
    Ineq(usize),
    Eq(usize),
}

/// Names for every variable and row of a [`CanonicalQp`], plus the location
/// of each bus-balance row.
///
/// Labels are plumbing for everything downstream: caps reference rows by
/// label, verification reports are labeled, and the CLI prints them. They are
/// unique within variables and unique across all rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowMap {
    vars: Vec<String>,
    ineq: Vec<String>,
    eq: Vec<String>,
    /// (bus id, equality-row index) for every bus-balance row, in bus order.
    balance: Vec<(String, usize)>,
}

impl RowMap {
    pub fn new(
        vars: Vec<String>,
        ineq: Vec<String>,
        eq: Vec<String>,
        balance: Vec<(String, usize)>,
    ) -> Result<Self, ModelError> {
        let mut seen = std::collections::HashSet::new();
        for label in &vars {
            if !seen.insert(label.as_str()) {
                return Err(ModelError::DuplicateLabel {
                    label: label.clone(),
                });
            }
        }
        seen.clear();
        for label in ineq.iter().chain(eq.iter()) {
            if !seen.insert(label.as_str()) {
                return Err(ModelError::DuplicateLabel {
                    label: label.clone(),
                });
            }
        }
        for (bus, row) in &balance {
            if *row >= eq.len() {
                return Err(ModelError::BadBalanceIndex { bus: bus.clone() });
            }
        }
        Ok(RowMap {
            vars,
            ineq,
            eq,
            balance,
        })
    }

    /// A map with synthesized labels (`x[i]`, `ineq[i]`, `eq[i]`) for programs
    /// built without named structure.
    pub fn synthetic(n: usize, m_ineq: usize, m_eq: usize) -> Self {
        RowMap {
            vars: (0..n).map(|i| format!("x[{i}]")).collect(),
            ineq: (0..m_ineq).map(|i| format!("ineq[{i}]")).collect(),
            eq: (0..m_eq).map(|i| format!("eq[{i}]")).collect(),
            balance: Vec::new(),
        }
    }

    pub fn var_labels(&self) -> &[String] {
        &self.vars
    }

    pub fn ineq_labels(&self) -> &[String] {
        &self.ineq
    }

    pub fn eq_labels(&self) -> &[String] {
        &self.eq
    }

    /// Bus-balance rows as (bus id, equality-row index), in bus order.
    pub fn balance_rows(&self) -> &[(String, usize)] {
        &self.balance
    }

    /// Equality-row index of the balance row for `bus`, if the program has one.
    pub fn balance_row(&self, bus: &str) -> Option<usize> {
        self.balance
            .iter()
            .find(|(id, _)| id == bus)
            .map(|(_, row)| *row)
    }

    /// Locate a row by its label.
    pub fn lookup(&self, label: &str) -> Option<RowRef> {
        if let Some(i) = self.ineq.iter().position(|l| l == label) {
            return Some(RowRef::Ineq(i));
        }
        self.eq
            .iter()
            .position(|l| l == label)
            .map(RowRef::Eq)
    }

    pub fn var_index(&self, label: &str) -> Option<usize> {
        self.vars.iter().position(|l| l == label)
    }

    pub fn row_label(&self, row: RowRef) -> Option<&str> {
        match row {
            RowRef::Ineq(i) => self.ineq.get(i).map(String::as_str),
            RowRef::Eq(i) => self.eq.get(i).map(String::as_str),
        }
    }
}

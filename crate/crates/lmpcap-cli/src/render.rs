//! Shared output plumbing: number formatting, aligned tables, case
//! loading, and cap merging.

use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use lmpcap::model::{BusCap, Compiled};
use lmpcap::{compile_dispatch, load_case, DispatchCase, SolveStatus};

/// Render `v` with six significant digits, trailing zeros trimmed.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    let trimmed = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        &s
    };
    if trimmed == "-0" {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}

/// A left-aligned text table with a header row.
pub struct Table {
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: Vec<S>) -> Self {
        Table {
            rows: vec![headers.into_iter().map(Into::into).collect()],
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.rows[0].len());
        self.rows.push(cells);
    }

    /// Column-aligned rendering, two spaces between columns, no trailing
    /// whitespace.
    pub fn render(&self) -> String {
        let cols = self.rows[0].len();
        let mut widths = vec![0usize; cols];
        for row in &self.rows {
            for (j, cell) in row.iter().enumerate() {
                widths[j] = widths[j].max(cell.len());
            }
        }
        let mut out = String::new();
        for row in &self.rows {
            let mut line = String::new();
            for (j, cell) in row.iter().enumerate() {
                if j + 1 == cols {
                    line.push_str(cell);
                } else {
                    line.push_str(&format!("{cell:<width$}  ", width = widths[j]));
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

/// Load a case and compile it, printing any compile warnings to stderr.
pub fn load_and_compile(path: &Path) -> Result<(DispatchCase, Compiled)> {
    let case = load_case(path).with_context(|| format!("case file {}", path.display()))?;
    let compiled =
        compile_dispatch(&case).with_context(|| format!("case file {}", path.display()))?;
    for warning in &compiled.warnings {
        eprintln!("warning: {warning}");
    }
    Ok((case, compiled))
}

/// File-level caps merged with `--cap` flags; a flag replaces the file's
/// cap on the same bus.
pub fn merge_caps(case: &DispatchCase, flags: &[BusCap]) -> Vec<BusCap> {
    let mut merged = case.caps.clone();
    for flag in flags {
        match merged.iter_mut().find(|c| c.bus == flag.bus) {
            Some(existing) => existing.price = flag.price,
            None => merged.push(flag.clone()),
        }
    }
    merged
}

/// Status line shared by the table renderers.
pub fn status_line(status: SolveStatus, iterations: usize) -> String {
    format!("{status} after {iterations} iterations")
}

/// 0 for an optimal solve, 2 for anything else.
pub fn exit_for(status: SolveStatus) -> ExitCode {
    if status == SolveStatus::Optimal {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

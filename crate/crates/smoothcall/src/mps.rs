//! MPS export of [`LpProblem`]s.
//!
//! Rows are named `OBJ`, `E1..` for equalities and `L1..` for `<=` rows;
//! columns are `X1..`. Names fit the eight-character field, so problems with
//! more than 9 999 999 rows or columns are rejected.
//!
//! The fixed layout limits numbers to twelve characters, about seven
//! significant digits. Calibration rows need more than that to stay
//! feasible at the original optimum, so [`MpsFormat::Free`] keeps the same
//! layout but writes every number exactly.

use std::fmt::Write as _;

use smoothcall_core::lp::LpProblem;

use crate::error::{Error, Result};

const MAX_INDEX: usize = 9_999_999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MpsFormat {
    #[default]
    Fixed,
    Free,
}

/// Twelve-character numeric field: the shortest exact form when it fits,
/// otherwise as many significant digits as the field allows.
fn fixed_number(v: f64) -> String {
    let exact = format!("{v:?}");
    if exact.len() <= 12 {
        return exact;
    }
    for digits in (0..=16).rev() {
        let s = format!("{v:.digits$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0e}")
}

fn row_name(prefix: char, i: usize) -> String {
    format!("{prefix}{}", i + 1)
}

/// Renders `problem` as a fixed-format MPS document.
pub fn to_mps(problem: &LpProblem, name: &str) -> Result<String> {
    to_mps_with(problem, name, MpsFormat::Fixed)
}

pub fn to_mps_with(problem: &LpProblem, name: &str, format: MpsFormat) -> Result<String> {
    let number = |v: f64| match format {
        MpsFormat::Fixed => fixed_number(v),
        MpsFormat::Free => format!("{v:?}"),
    };
    let n = problem.n_vars();
    let (eq, le) = (problem.eq_rows(), problem.le_rows());
    if n > MAX_INDEX || eq.len() > MAX_INDEX || le.len() > MAX_INDEX {
        return Err(Error::Usage("problem too large for fixed MPS names".into()));
    }
    let mut columns: Vec<Vec<(String, f64)>> = vec![Vec::new(); n];
    for (j, &c) in problem.objective().iter().enumerate() {
        if c != 0.0 {
            columns[j].push(("OBJ".into(), c));
        }
    }
    for (prefix, rows) in [('E', eq), ('L', le)] {
        for (i, row) in rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                if a != 0.0 {
                    columns[j].push((row_name(prefix, i), a));
                }
            }
        }
    }

    let mut out = String::new();
    let title: String = name.chars().filter(|c| !c.is_whitespace()).take(8).collect();
    let _ = writeln!(out, "NAME          {title}");
    out.push_str("ROWS\n N  OBJ\n");
    for i in 0..eq.len() {
        let _ = writeln!(out, " E  {}", row_name('E', i));
    }
    for i in 0..le.len() {
        let _ = writeln!(out, " L  {}", row_name('L', i));
    }
    out.push_str("COLUMNS\n");
    for (j, entries) in columns.iter().enumerate() {
        let col = row_name('X', j);
        // a column must appear at least once to be declared
        if entries.is_empty() {
            let _ = writeln!(out, "    {col:<8}  {:<8}  {:>12}", "OBJ", number(0.0));
        }
        for (row, a) in entries {
            let _ = writeln!(out, "    {col:<8}  {row:<8}  {:>12}", number(*a));
        }
    }
    out.push_str("RHS\n");
    for (prefix, rows) in [('E', eq), ('L', le)] {
        for (i, row) in rows.iter().enumerate() {
            if row.rhs != 0.0 {
                let _ = writeln!(out, "    {:<8}  {:<8}  {:>12}", "RHS", row_name(prefix, i), number(row.rhs));
            }
        }
    }
    out.push_str("BOUNDS\n");
    for j in 0..n {
        let col = row_name('X', j);
        let (lo, hi) = (problem.lower()[j], problem.upper()[j]);
        let mut bound = |kind: &str, v: Option<f64>| {
            let line = match v {
                Some(v) => format!(" {kind} {:<8}  {col:<8}  {:>12}", "BND", number(v)),
                None => format!(" {kind} {:<8}  {col}", "BND"),
            };
            let _ = writeln!(out, "{line}");
        };
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            bound("FR", None);
            continue;
        }
        if lo == hi {
            bound("FX", Some(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY {
            bound("MI", None);
        } else if lo != 0.0 {
            bound("LO", Some(lo));
        }
        if hi != f64::INFINITY {
            bound("UP", Some(hi));
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

/// Reads a document produced by [`to_mps`] back into a problem.
///
/// Only the subset written by the exporter is understood. Rows keep their
/// section order, so a round trip reproduces the problem up to the
/// precision of the numeric fields.
pub fn from_mps(text: &str) -> std::result::Result<LpProblem, String> {
    #[derive(PartialEq)]
    enum Section {
        Head,
        Rows,
        Columns,
        Rhs,
        Bounds,
        End,
    }
    let index = |name: &str, prefix: char| -> std::result::Result<usize, String> {
        name.strip_prefix(prefix)
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&i| i >= 1)
            .map(|i| i - 1)
            .ok_or_else(|| format!("unexpected name {name:?}"))
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number {s:?}"));

    let mut section = Section::Head;
    let (mut n_eq, mut n_le) = (0usize, 0usize);
    let mut cols: Vec<Vec<(String, f64)>> = Vec::new();
    let mut rhs: Vec<(String, f64)> = Vec::new();
    let mut bounds: Vec<(String, usize, f64)> = Vec::new();

    for (n, line) in text.lines().enumerate() {
        let err = |m: String| format!("line {}: {m}", n + 1);
        if line.trim().is_empty() {
            continue;
        }
        if !line.starts_with(' ') {
            section = match line.split_whitespace().next().unwrap_or("") {
                "NAME" => Section::Head,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(format!("unknown section {other:?}"))),
            };
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Rows => match (f.first().copied(), f.get(1)) {
                (Some("N"), _) => {}
                (Some("E"), Some(name)) if index(name, 'E').map_err(err)? == n_eq => n_eq += 1,
                (Some("L"), Some(name)) if index(name, 'L').map_err(err)? == n_le => n_le += 1,
                _ => return Err(err("malformed row entry".into())),
            },
            Section::Columns => {
                let [col, row, value] = f[..] else { return Err(err("expected 3 fields".into())) };
                let j = index(col, 'X').map_err(err)?;
                if j > cols.len() {
                    return Err(err("columns out of order".into()));
                }
                if j == cols.len() {
                    cols.push(Vec::new());
                }
                cols[j].push((row.to_string(), num(value).map_err(err)?));
            }
            Section::Rhs => {
                let [_, row, value] = f[..] else { return Err(err("expected 3 fields".into())) };
                rhs.push((row.to_string(), num(value).map_err(err)?));
            }
            Section::Bounds => {
                let kind = f[0].to_string();
                let j = index(f.get(2).copied().unwrap_or(""), 'X').map_err(err)?;
                let v = match f.get(3) {
                    Some(s) => num(s).map_err(err)?,
                    None => 0.0,
                };
                bounds.push((kind, j, v));
            }
            Section::Head | Section::End => return Err(err("unexpected data line".into())),
        }
    }
    if section != Section::End {
        return Err("missing ENDATA".into());
    }

    let mut problem = LpProblem::new(cols.len());
    let mut eq_terms = vec![Vec::new(); n_eq];
    let mut le_terms = vec![Vec::new(); n_le];
    for (j, entries) in cols.iter().enumerate() {
        for (row, a) in entries {
            if row == "OBJ" {
                problem.set_cost(j, *a);
            } else if row.starts_with('E') {
                eq_terms.get_mut(index(row, 'E')?).ok_or("unknown row")?.push((j, *a));
            } else {
                le_terms.get_mut(index(row, 'L')?).ok_or("unknown row")?.push((j, *a));
            }
        }
    }
    let mut eq_rhs = vec![0.0; n_eq];
    let mut le_rhs = vec![0.0; n_le];
    for (row, v) in rhs {
        if row.starts_with('E') {
            *eq_rhs.get_mut(index(&row, 'E')?).ok_or("unknown row")? = v;
        } else {
            *le_rhs.get_mut(index(&row, 'L')?).ok_or("unknown row")? = v;
        }
    }
    for (terms, b) in eq_terms.into_iter().zip(eq_rhs) {
        problem.add_eq(terms, b);
    }
    for (terms, b) in le_terms.into_iter().zip(le_rhs) {
        problem.add_le(terms, b);
    }
    for (kind, j, v) in bounds {
        if j >= problem.n_vars() {
            return Err(format!("bound on unknown column X{}", j + 1));
        }
        let (lo, hi) = (problem.lower()[j], problem.upper()[j]);
        let (lo, hi) = match kind.as_str() {
            "FR" => (f64::NEG_INFINITY, f64::INFINITY),
            "FX" => (v, v),
            "MI" => (f64::NEG_INFINITY, hi),
            "LO" => (v, hi),
            "UP" => (lo, v),
            other => return Err(format!("unsupported bound type {other:?}")),
        };
        problem.set_bounds(j, lo, hi);
    }
    Ok(problem)
}

//! Plain-text LCP instance files and JSON solve reports.
//!
//! A tridiagonal instance is written as
//!
//! ```text
//! # comments and blank lines are ignored
//! 3
//! 0 -1 -1        # lower band, entry 0 is padding and must be 0
//! 4 4 4          # diagonal
//! -1 -1 0        # upper band, last entry is padding and must be 0
//! 1 1 1          # b
//! 0 0 0          # c
//! 0 0 0          # optional starting vector
//! ```
//!
//! A dense instance (at most 16 unknowns) replaces the size line and the
//! three bands by a `DENSE n` header followed by `n` matrix rows.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LcpError, Result};
use crate::lcp::{LcpProblem, SolveReport};
use crate::matrix::{DenseMatrix, Matrix, TridiagSystem};

#[derive(Debug, Clone)]
pub struct LcpFile {
    pub problem: LcpProblem,
    pub x0: Option<Vec<f64>>,
}

/// Non-empty lines with comments removed, tagged with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_numbers(line: usize, s: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let values = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| LcpError::Parse {
                line,
                msg: format!("{what}: '{t}' is not a number"),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != expected {
        return Err(LcpError::Parse {
            line,
            msg: format!("{what}: expected {expected} values, found {}", values.len()),
        });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(LcpError::Parse {
            line,
            msg: format!("{what}: non-finite value {v}"),
        });
    }
    Ok(values)
}

fn parse_size(line: usize, s: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(LcpError::Parse {
            line,
            msg: format!("expected a dimension N >= 1, found '{s}'"),
        }),
    }
}

pub fn parse_lcp(text: &str) -> Result<LcpFile> {
    let mut lines = content_lines(text);
    let last_line = text.lines().count().max(1);
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| LcpError::Parse {
            line: last_line,
            msg: format!("unexpected end of file, expected {what}"),
        })
    };

    let (hl, header) = next("the dimension line")?;
    let mut words = header.split_whitespace();
    let first = words.next().unwrap_or_default();
    let matrix: Matrix;
    let n;
    if first.eq_ignore_ascii_case("DENSE") {
        let size = words.next().ok_or_else(|| LcpError::Parse {
            line: hl,
            msg: "DENSE header needs a dimension".into(),
        })?;
        n = parse_size(hl, size)?;
        let mut rows = Vec::with_capacity(n);
        for r in 0..n {
            let (l, s) = next("a matrix row")?;
            rows.push(parse_numbers(l, s, n, &format!("matrix row {}", r + 1))?);
        }
        matrix = DenseMatrix::from_rows(rows)
            .map_err(|e| LcpError::Parse {
                line: hl,
                msg: e.to_string(),
            })?
            .into();
    } else {
        if words.next().is_some() {
            return Err(LcpError::Parse {
                line: hl,
                msg: "the dimension line must hold a single integer".into(),
            });
        }
        n = parse_size(hl, first)?;
        let (ll, s) = next("the lower band")?;
        let lower = parse_numbers(ll, s, n, "lower band")?;
        let (dl, s) = next("the diagonal")?;
        let diag = parse_numbers(dl, s, n, "diagonal")?;
        let (ul, s) = next("the upper band")?;
        let upper = parse_numbers(ul, s, n, "upper band")?;
        matrix = TridiagSystem::new(lower, diag, upper)
            .map_err(|e| LcpError::Parse {
                line: ll,
                msg: e.to_string(),
            })?
            .into();
    }
    let (bl, s) = next("the right-hand side b")?;
    let b = parse_numbers(bl, s, n, "b")?;
    let (cl, s) = next("the obstacle c")?;
    let c = parse_numbers(cl, s, n, "c")?;
    let x0 = match lines.next() {
        Some((xl, s)) => Some(parse_numbers(xl, s, n, "x0")?),
        None => None,
    };
    if let Some((extra, _)) = lines.next() {
        return Err(LcpError::Parse {
            line: extra,
            msg: "unexpected trailing content".into(),
        });
    }
    Ok(LcpFile {
        problem: LcpProblem::new(matrix, b, c)?,
        x0,
    })
}

pub fn read_lcp(path: &Path) -> Result<LcpFile> {
    parse_lcp(&std::fs::read_to_string(path)?)
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Serialises `problem` in the format read by [`parse_lcp`]. Values are
/// written with round-trip precision.
pub fn format_lcp(problem: &LcpProblem, x0: Option<&[f64]>) -> String {
    let mut out = String::new();
    match problem.matrix() {
        Matrix::Tridiag(t) => {
            let _ = writeln!(out, "{}", t.n());
            let _ = writeln!(out, "{}", join(t.lower()));
            let _ = writeln!(out, "{}", join(t.diag()));
            let _ = writeln!(out, "{}", join(t.upper()));
        }
        Matrix::Dense(d) => {
            let _ = writeln!(out, "DENSE {}", d.n());
            for i in 0..d.n() {
                let _ = writeln!(out, "{}", join(d.row(i)));
            }
        }
    }
    let _ = writeln!(out, "{}", join(problem.rhs()));
    let _ = writeln!(out, "{}", join(problem.obstacle()));
    if let Some(x0) = x0 {
        let _ = writeln!(out, "{}", join(x0));
    }
    out
}

pub fn write_lcp(path: &Path, problem: &LcpProblem, x0: Option<&[f64]>) -> Result<()> {
    std::fs::write(path, format_lcp(problem, x0))?;
    Ok(())
}

/// Parses a comma- or whitespace-separated list of numbers.
pub fn parse_vector_list(s: &str) -> Result<Vec<f64>> {
    let count = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .count();
    parse_numbers(1, s, count, "vector")
}

/// The JSON document written for a standalone solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutput {
    pub solver: String,
    pub converged: bool,
    pub lcp_satisfied: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub solution: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SolveReport>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| LcpError::InvalidConfig(format!("json: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_solve_output(path: &Path) -> Result<SolveOutput> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| LcpError::Parse {
        line: e.line(),
        msg: e.to_string(),
    })
}

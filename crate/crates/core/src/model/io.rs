//! The `tcbo-model v1` text format.
//!
//! ```text
//! tcbo-model v1
//! <var_count>
//! <cardinality_0> <cardinality_1> ...
//! <factor_count>
//! scope: <v> <v> ...        (one pair of lines per factor)
//! <t_0> <t_1> ...           (row-major, last scope variable fastest)
//! ```
//!
//! Table values are written with 17 significant digits so a save/load round
//! trip is bit-exact. Blank lines are ignored by the reader.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{DiscreteModel, Factor};
use crate::error::{Error, Result};

pub const MODEL_HEADER: &str = "tcbo-model v1";

pub fn write_model<W: Write>(model: &DiscreteModel, mut out: W) -> Result<()> {
    writeln!(out, "{MODEL_HEADER}")?;
    writeln!(out, "{}", model.var_count())?;
    writeln!(out, "{}", join(model.cardinalities().iter().map(|c| c.to_string())))?;
    writeln!(out, "{}", model.factors().len())?;
    for f in model.factors() {
        writeln!(out, "scope: {}", join(f.scope.iter().map(|v| v.to_string())))?;
        writeln!(out, "{}", join(f.table.iter().map(|t| format!("{t:.16e}"))))?;
    }
    Ok(())
}

pub fn save_model(model: &DiscreteModel, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_model(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<DiscreteModel> {
    read_model(fs::File::open(path)?)
}

pub fn read_model<R: Read>(input: R) -> Result<DiscreteModel> {
    let mut lines = Lines::new(input);
    let (n, header) = lines.next_line("header")?;
    if header.trim() != MODEL_HEADER {
        return Err(parse_err(n, format!("expected header `{MODEL_HEADER}`, found `{}`", header.trim())));
    }
    let (n, line) = lines.next_line("variable count")?;
    let var_count: usize = parse_one(n, &line, "variable count")?;
    let (n, line) = lines.next_line("cardinalities")?;
    let cards: Vec<usize> = parse_all(n, &line, "cardinality")?;
    if cards.len() != var_count {
        return Err(Error::DimensionMismatch(format!(
            "line {n}: {} cardinalities listed for {var_count} variables",
            cards.len()
        )));
    }
    let (n, line) = lines.next_line("factor count")?;
    let factor_count: usize = parse_one(n, &line, "factor count")?;
    let mut factors = Vec::with_capacity(factor_count);
    for k in 0..factor_count {
        let (n, line) = lines.next_line(&format!("scope of factor {k}"))?;
        let rest = line
            .trim()
            .strip_prefix("scope:")
            .ok_or_else(|| parse_err(n, format!("expected `scope:` for factor {k}")))?;
        let scope: Vec<usize> = parse_all(n, rest, "scope index")?;
        if let Some(v) = scope.iter().find(|&&v| v >= var_count) {
            return Err(parse_err(n, format!("scope index {v} out of range for {var_count} variables")));
        }
        let (n, line) = lines.next_line(&format!("table of factor {k}"))?;
        let table: Vec<f64> = parse_all(n, &line, "table value")?;
        let expected: usize = scope.iter().map(|&v| cards[v]).product();
        if table.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "line {n}: factor {k} table has {} entries, scope cardinalities require {expected}",
                table.len()
            )));
        }
        factors.push(Factor::new(scope, table));
    }
    if let Some((n, extra)) = lines.next_nonblank()? {
        return Err(parse_err(n, format!("unexpected trailing content `{}`", extra.trim())));
    }
    DiscreteModel::new(cards, factors)
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    line_no: usize,
}

impl<R: Read> Lines<R> {
    fn new(input: R) -> Self {
        Self { inner: BufReader::new(input).lines(), line_no: 0 }
    }

    fn next_nonblank(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            self.line_no += 1;
            let line = line?;
            if !line.trim().is_empty() {
                return Ok(Some((self.line_no, line)));
            }
        }
        Ok(None)
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, String)> {
        self.next_nonblank()?
            .ok_or_else(|| parse_err(self.line_no + 1, format!("unexpected end of file, expected {what}")))
    }
}

fn parse_err(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

fn parse_one<T: std::str::FromStr>(n: usize, line: &str, what: &str) -> Result<T> {
    let mut values: Vec<T> = parse_all(n, line, what)?;
    if values.len() != 1 {
        return Err(parse_err(n, format!("expected a single {what}, found {} tokens", values.len())));
    }
    Ok(values.remove(0))
}

fn parse_all<T: std::str::FromStr>(n: usize, line: &str, what: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .enumerate()
        .map(|(pos, tok)| {
            tok.parse()
                .map_err(|_| parse_err(n, format!("token {} (`{tok}`) is not a valid {what}", pos + 1)))
        })
        .collect()
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(" ")
}

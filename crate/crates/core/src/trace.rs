//! Trace files: per-sweep CSV and a JSON document carrying the run
//! description alongside the full trace.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cli::RunSpec;
use crate::error::{Error, Result};
use crate::solvers::{SolverTrace, SweepRecord};

pub const CSV_HEADER: [&str; 5] = ["sweep", "bound", "admissibility_residual", "consistency_residual", "elapsed_ms"];

/// Writes one row per sweep under [`CSV_HEADER`]. Floats are written in
/// shortest round-trip form, so [`read_records_csv`] recovers them exactly.
pub fn write_records_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse { line: 1, message: format!("unexpected trace header `{}`", header.iter().collect::<Vec<_>>().join(",")) });
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse { line, message: format!("{kind:?}") },
    }
}

/// JSON form of a run: how it was invoked and what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub run: RunSpec,
    pub trace: SolverTrace,
}

pub fn write_trace_json<W: Write>(doc: &TraceDocument, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, doc).map_err(json_error)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_trace_json<R: Read>(input: R) -> Result<TraceDocument> {
    serde_json::from_reader(input).map_err(json_error)
}

fn json_error(e: serde_json::Error) -> Error {
    if e.is_io() {
        return Error::Io(e.into());
    }
    Error::Parse { line: e.line(), message: e.to_string() }
}

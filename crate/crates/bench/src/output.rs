//! CSV records. Reals are written with 17 significant digits so they read
//! back bit-exactly.

use std::io::{Read, Write};

use serde::Deserialize;

use crate::{BenchError, Result};

pub const RESULT_HEADER: [&str; 9] =
    ["solver", "d", "replication", "k", "f_gap", "residual", "sfo_calls", "wall_ms", "seed"];

pub const SUMMARY_HEADER: [&str; 9] = [
    "solver",
    "d",
    "replications",
    "final_gap",
    "final_residual",
    "output_gap",
    "output_residual",
    "sfo_calls",
    "reference_residual",
];

/// `{:.16e}`, i.e. 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub solver: String,
    pub d: usize,
    pub replication: usize,
    pub k: usize,
    pub f_gap: f64,
    pub residual: f64,
    pub sfo_calls: u64,
    pub wall_ms: u64,
    pub seed: u64,
}

/// Replication averages for one `(solver, d)` cell.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SummaryRow {
    pub solver: String,
    pub d: usize,
    pub replications: usize,
    /// At `x^{K+1}`.
    pub final_gap: f64,
    pub final_residual: f64,
    /// At the random output `x^{Y+1}`.
    pub output_gap: f64,
    pub output_residual: f64,
    pub sfo_calls: u64,
    /// Largest stationarity residual of the `f*` reference point over the replications.
    pub reference_residual: f64,
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record([
            r.solver.clone(),
            r.d.to_string(),
            r.replication.to_string(),
            r.k.to_string(),
            fmt_real(r.f_gap),
            fmt_real(r.residual),
            r.sfo_calls.to_string(),
            r.wall_ms.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.solver.clone(),
            r.d.to_string(),
            r.replications.to_string(),
            fmt_real(r.final_gap),
            fmt_real(r.final_residual),
            fmt_real(r.output_gap),
            fmt_real(r.output_residual),
            r.sfo_calls.to_string(),
            fmt_real(r.reference_residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(BenchError::Usage(format!("not a summary file: header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let rows = r.deserialize().collect::<std::result::Result<Vec<SummaryRow>, _>>()?;
    Ok(rows)
}

//! Experiment harness: instance generation, single runs, dimension sweeps
//! with replications, CSV output and SVG charts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod output;
pub mod plot;
pub mod runner;
pub mod spec;
pub mod sweep;

use disfom::DisfomError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] DisfomError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl BenchError {
    /// 3 for solver convergence failures, 2 for everything else (bad
    /// arguments, unreadable or malformed input).
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Core(DisfomError::NotConverged { .. }) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

//! Dimension sweeps.
//!
//! Every `(d, replication)` cell gets a fresh instance and its own `f*`; every
//! solver then runs on it from `x¹ = 0`. Cells are independent and seeded from
//! the sweep configuration alone, so the output does not depend on the number
//! of threads or on completion order.

use std::fs;
use std::path::{Path, PathBuf};

use disfom::metrics::box_stationarity_residual;
use disfom::problem::{StochasticProblem, SyntheticQP};
use disfom::solvers::IterRecord;
use rayon::prelude::*;

use crate::output::{write_results, write_summary, ResultRow, SummaryRow};
use crate::runner::{instance_seed, run_seed, run_solver, Reference};
use crate::spec::SweepSpec;
use crate::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    /// Ordered by `(solver, d, replication, k)`.
    pub rows: Vec<ResultRow>,
    /// Ordered by `(solver, d)`.
    pub summary: Vec<SummaryRow>,
}

struct Instance {
    d: usize,
    replication: usize,
    seed: u64,
    problem: SyntheticQP,
    reference: Reference,
}

struct CellResult {
    rows: Vec<ResultRow>,
    final_gap: f64,
    final_residual: f64,
    output_gap: f64,
    output_residual: f64,
    sfo: u64,
}

fn point_metrics(problem: &SyntheticQP, reference: &Reference, x: &[f64]) -> Result<(f64, f64)> {
    let g = problem.gradient(x)?;
    let r = box_stationarity_residual(&g, x, problem.box_radius())?;
    Ok((reference.gap(problem.value(x)?), r))
}

/// Runs the sweep on a pool of `threads` workers (0 = rayon default).
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<SweepOutput> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| sweep_in_pool(spec))
}

fn sweep_in_pool(spec: &SweepSpec) -> Result<SweepOutput> {
    let mut dims = spec.dims.clone();
    dims.sort_unstable();
    let p = spec.problem;

    let cells: Vec<(usize, usize)> = dims.iter().flat_map(|&d| (0..spec.replications).map(move |r| (d, r))).collect();
    let instances: Vec<Instance> = cells
        .par_iter()
        .map(|&(d, replication)| {
            let seed = instance_seed(spec.base_seed, d, replication);
            let problem = SyntheticQP::generate(d, seed, p.radius, p.truncation, p.lambda_reg)?;
            let reference = Reference::compute(&problem, &vec![0.0; d])?;
            Ok(Instance { d, replication, seed, problem, reference })
        })
        .collect::<Result<_>>()?;

    let names: Vec<&String> = spec.solvers.keys().collect();
    let jobs: Vec<(usize, usize)> = (0..names.len()).flat_map(|s| (0..instances.len()).map(move |i| (s, i))).collect();
    let results: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(s, i)| {
            let name = names[s];
            let inst = &instances[i];
            let seed = run_seed(inst.seed, name);
            let x1 = vec![0.0; inst.d];
            let mut history: Vec<IterRecord> = Vec::new();
            let res = run_solver(&inst.problem, &spec.solvers[name], seed, &x1, spec.timing, &mut history)?;
            let rows = history
                .iter()
                .map(|h| ResultRow {
                    solver: name.clone(),
                    d: inst.d,
                    replication: inst.replication,
                    k: h.k,
                    f_gap: inst.reference.gap(h.f_value),
                    residual: h.residual,
                    sfo_calls: h.sfo_calls,
                    wall_ms: h.wall_ms,
                    seed,
                })
                .collect();
            let (final_gap, final_residual) = point_metrics(&inst.problem, &inst.reference, &res.x_final)?;
            let (output_gap, output_residual) = point_metrics(&inst.problem, &inst.reference, &res.x_out)?;
            Ok(CellResult { rows, final_gap, final_residual, output_gap, output_residual, sfo: res.total_sfo })
        })
        .collect::<Result<_>>()?;

    // jobs are already in (solver, d, replication) order
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let reps = spec.replications;
    for (s, name) in names.iter().enumerate() {
        for (di, &d) in dims.iter().enumerate() {
            let block = &results[s * instances.len() + di * reps..s * instances.len() + (di + 1) * reps];
            let insts = &instances[di * reps..(di + 1) * reps];
            let mean = |f: fn(&CellResult) -> f64| block.iter().map(f).sum::<f64>() / reps as f64;
            summary.push(SummaryRow {
                solver: (*name).clone(),
                d,
                replications: reps,
                final_gap: mean(|c| c.final_gap),
                final_residual: mean(|c| c.final_residual),
                output_gap: mean(|c| c.output_gap),
                output_residual: mean(|c| c.output_residual),
                sfo_calls: block[0].sfo,
                reference_residual: insts.iter().map(|i| i.reference.residual).fold(0.0, f64::max),
            });
        }
    }
    for c in results {
        rows.extend(c.rows);
    }
    Ok(SweepOutput { rows, summary })
}

/// Writes `results.csv` and `summary.csv` into `dir`, returning their paths.
pub fn write_sweep(out: &SweepOutput, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let results = dir.join("results.csv");
    let summary = dir.join("summary.csv");
    write_results(&out.rows, fs::File::create(&results)?)?;
    write_summary(&out.summary, fs::File::create(&summary)?)?;
    Ok((results, summary))
}

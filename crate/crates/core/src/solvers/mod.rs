//! The main method, its parameter presets, the baselines, and the reference
//! solver used to compute `f*`.
//!
//! All stochastic solvers share one driver: at iteration `k` an estimator
//! produces `G^k` at `x^k`, a method-specific step maps it to `x^{k+1}`, and a
//! record of `f(x^{k+1})` and the stationarity residual is handed to a
//! [`RecordSink`]. The output index `Y` is drawn from its own stream before
//! the first step, so it never perturbs the samples.

mod presets;
mod reference;
mod smd;

pub use presets::{
    preset_case1_minibatch, preset_case1_vr, preset_case2_minibatch, preset_case2_vr, AnalysisConstants, PresetInputs,
};
pub use reference::{projected_gradient_backtracking, ReferenceSolution};
pub use smd::{dual_map, mirror_map, preset_smd, run_smd, run_smd_with_sink, SmdConfig};

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::admm::{direct_prox_step, solve_proximal_projection, AdmmConfig};
use crate::error::{check_finite, check_len};
use crate::estimator::{minibatch_estimate, EstimatorKind, EstimatorState};
use crate::metrics::box_stationarity_residual;
use crate::problem::StochasticProblem;
use crate::prox::ProxKind;
use crate::rng::{substream, STREAM_DIAGNOSTICS, STREAM_OUTPUT_INDEX, STREAM_SAMPLES};
use crate::{DisfomError, Result};

/// One recorded iteration, describing `x^{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    pub f_value: f64,
    pub residual: f64,
    /// Set when `f` and `∇f` had to be estimated from samples. `f_value` is
    /// then NaN, since the oracle only returns gradients.
    pub estimated: bool,
    /// Cumulative oracle calls after iteration `k`.
    pub sfo_calls: u64,
    pub samples_used: u64,
    /// Milliseconds since the start of the run, or 0 when timing is off.
    pub wall_ms: u64,
}

/// Receives per-iteration records as a run progresses.
pub trait RecordSink {
    fn record(&mut self, rec: &IterRecord);
}

impl RecordSink for Vec<IterRecord> {
    fn record(&mut self, rec: &IterRecord) {
        self.push(*rec);
    }
}

/// Discards everything.
pub struct NullSink;

impl RecordSink for NullSink {
    fn record(&mut self, _rec: &IterRecord) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// `x^{Y+1}`.
    pub x_out: Vec<f64>,
    /// `x^{K+1}`.
    pub x_final: Vec<f64>,
    /// `Y`, uniform on `1..=K`.
    pub output_index: usize,
    pub history: Vec<IterRecord>,
    pub total_sfo: u64,
    pub samples_used: u64,
    /// Subsolver iterations summed over the run.
    pub inner_iterations: u64,
}

/// Configuration of the main method. SGD and SVRG are the special case
/// `prox = EuclideanNone`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisfomConfig {
    pub eta: f64,
    pub iterations: usize,
    pub estimator: EstimatorKind,
    pub prox: ProxKind,
    /// Subsolver settings; `admm.epsilon_hat` is the accuracy `ε̂` of the
    /// proximal projection.
    pub admm: AdmmConfig,
    /// Drop the box and take the exact proximal step on all of `ℝ^d`.
    pub unconstrained: bool,
    pub seed: u64,
    /// Seed for the output index alone; defaults to `seed`.
    pub output_seed: Option<u64>,
    pub record_history: bool,
    /// Fill `wall_ms`. Off by default so that histories are reproducible.
    pub timing: bool,
    pub analysis: Option<AnalysisConstants>,
}

impl DisfomConfig {
    pub fn new(eta: f64, iterations: usize, estimator: EstimatorKind, prox: ProxKind) -> Self {
        DisfomConfig {
            eta,
            iterations,
            estimator,
            prox,
            admm: AdmmConfig::default(),
            unconstrained: false,
            seed: 0,
            output_seed: None,
            record_history: true,
            timing: false,
            analysis: None,
        }
    }

    pub fn epsilon_hat(&self) -> f64 {
        self.admm.epsilon_hat
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(DisfomError::Config(format!("step size must be positive, got {}", self.eta)));
        }
        if self.iterations == 0 {
            return Err(DisfomError::Config("iteration count must be positive".into()));
        }
        self.estimator.validate()?;
        self.prox.validate()?;
        self.admm.validate()
    }
}

/// Projected SGD: minibatch estimator followed by Euclidean projection.
pub fn sgd_config(eta: f64, iterations: usize, batch: usize, seed: u64) -> DisfomConfig {
    let mut cfg = DisfomConfig::new(eta, iterations, EstimatorKind::Minibatch { batch }, ProxKind::EuclideanNone);
    cfg.seed = seed;
    cfg
}

/// Projected SVRG: the checkpointed estimator followed by Euclidean projection.
pub fn svrg_config(
    eta: f64,
    iterations: usize,
    batch: usize,
    checkpoint_batch: usize,
    interval: usize,
    seed: u64,
) -> DisfomConfig {
    let est = EstimatorKind::VarianceReduced { batch, checkpoint_batch, interval };
    let mut cfg = DisfomConfig::new(eta, iterations, est, ProxKind::EuclideanNone);
    cfg.seed = seed;
    cfg
}

pub fn run_sgd<P: StochasticProblem>(
    problem: &P,
    eta: f64,
    iterations: usize,
    batch: usize,
    seed: u64,
    x1: &[f64],
) -> Result<RunResult> {
    run_disfom(problem, &sgd_config(eta, iterations, batch, seed), x1)
}

#[allow(clippy::too_many_arguments)]
pub fn run_svrg<P: StochasticProblem>(
    problem: &P,
    eta: f64,
    iterations: usize,
    batch: usize,
    checkpoint_batch: usize,
    interval: usize,
    seed: u64,
    x1: &[f64],
) -> Result<RunResult> {
    run_disfom(problem, &svrg_config(eta, iterations, batch, checkpoint_batch, interval, seed), x1)
}

pub fn run_disfom<P: StochasticProblem>(problem: &P, cfg: &DisfomConfig, x1: &[f64]) -> Result<RunResult> {
    run_disfom_with_sink(problem, cfg, x1, &mut NullSink)
}

/// Runs the method, streaming records to `sink`. When a subsolve fails the
/// error is returned and the sink holds the history up to that point.
pub fn run_disfom_with_sink<P: StochasticProblem>(
    problem: &P,
    cfg: &DisfomConfig,
    x1: &[f64],
    sink: &mut dyn RecordSink,
) -> Result<RunResult> {
    cfg.validate()?;
    let radius = problem.box_radius();
    let opts = DriveOptions {
        iterations: cfg.iterations,
        seed: cfg.seed,
        output_seed: cfg.output_seed,
        record_history: cfg.record_history,
        timing: cfg.timing,
        constrained: !cfg.unconstrained,
    };
    drive(problem, &opts, cfg.estimator, x1, sink, |x, g| {
        let eta_g: Vec<f64> = g.iter().map(|v| cfg.eta * v).collect();
        if cfg.unconstrained {
            if cfg.prox == ProxKind::EuclideanNone {
                return Ok((x.iter().zip(&eta_g).map(|(a, b)| a - b).collect(), 0));
            }
            return Ok((direct_prox_step(x, &eta_g, cfg.prox)?.x_next, 0));
        }
        let v: Vec<f64> = x.iter().zip(&eta_g).map(|(a, b)| a - b).collect();
        let cert = solve_proximal_projection(x, &v, cfg.prox, radius, &cfg.admm, None)?;
        Ok((cert.x_next, cert.iterations as u64))
    })
}

pub(crate) struct DriveOptions {
    pub iterations: usize,
    pub seed: u64,
    pub output_seed: Option<u64>,
    pub record_history: bool,
    pub timing: bool,
    pub constrained: bool,
}

/// `f(x)` and the stationarity residual at `x`, estimated from `batch`
/// samples when the problem has no closed forms.
fn evaluate<P: StochasticProblem>(
    problem: &P,
    x: &[f64],
    constrained: bool,
    batch: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, bool)> {
    let (f, g, estimated) = match problem.closed_form_gradient(x) {
        Some(g) => (problem.closed_form_value(x).unwrap_or(f64::NAN), g, false),
        None => (f64::NAN, minibatch_estimate(problem, x, batch, rng)?, true),
    };
    let residual = if constrained {
        box_stationarity_residual(&g, x, problem.box_radius())?
    } else {
        g.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    };
    Ok((f, residual, estimated))
}

pub(crate) fn drive<P, F>(
    problem: &P,
    opts: &DriveOptions,
    estimator: EstimatorKind,
    x1: &[f64],
    sink: &mut dyn RecordSink,
    mut step: F,
) -> Result<RunResult>
where
    P: StochasticProblem,
    F: FnMut(&[f64], &[f64]) -> Result<(Vec<f64>, u64)>,
{
    check_len(problem.dim(), x1.len())?;
    check_finite("x1", x1)?;
    let radius = problem.box_radius();
    if opts.constrained && x1.iter().any(|v| v.abs() > radius) {
        return Err(DisfomError::InvalidArgument("starting point lies outside the box".into()));
    }
    if opts.iterations == 0 {
        return Err(DisfomError::Config("iteration count must be positive".into()));
    }
    let start = Instant::now();
    let mut samples = substream(opts.seed, STREAM_SAMPLES);
    let mut diagnostics = substream(opts.seed, STREAM_DIAGNOSTICS);
    let output_index =
        substream(opts.output_seed.unwrap_or(opts.seed), STREAM_OUTPUT_INDEX).random_range(1..=opts.iterations);
    let eval_batch = 10
        * match estimator {
            EstimatorKind::Minibatch { batch } => batch,
            EstimatorKind::VarianceReduced { checkpoint_batch, .. } => checkpoint_batch,
        };

    let mut est = EstimatorState::new(estimator)?;
    let mut x = x1.to_vec();
    let mut x_out = Vec::new();
    let mut history = Vec::new();
    let mut inner = 0u64;
    for k in 1..=opts.iterations {
        let g = est.estimate(problem, k, &x, &mut samples)?;
        let (next, it) = step(&x, &g)?;
        inner += it;
        x = next;
        if k == output_index {
            x_out = x.clone();
        }
        if opts.record_history {
            let (f_value, residual, estimated) = evaluate(problem, &x, opts.constrained, eval_batch, &mut diagnostics)?;
            let rec = IterRecord {
                k,
                f_value,
                residual,
                estimated,
                sfo_calls: est.sfo_calls(),
                samples_used: est.samples_used(),
                wall_ms: if opts.timing { start.elapsed().as_millis() as u64 } else { 0 },
            };
            sink.record(&rec);
            history.push(rec);
        }
    }
    Ok(RunResult {
        x_out,
        x_final: x,
        output_index,
        history,
        total_sfo: est.sfo_calls(),
        samples_used: est.samples_used(),
        inner_iterations: inner,
    })
}

//! Gradient estimators: plain minibatch averages and the checkpointed
//! variance-reduced recursion.
//!
//! Every batch draws a fresh 64-bit key from the caller's generator and takes
//! sample `i` from ChaCha stream `i` of that key. Samples are processed in
//! fixed-size chunks whose partial sums are combined in chunk order, so the
//! estimate is bit-identical for any number of worker threads.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{check_finite, check_len};
use crate::problem::StochasticProblem;
use crate::rng::substream;
use crate::{DisfomError, Result};

const CHUNK: usize = 32;

/// `n_k = ⌊(k-1)/q⌋q + 1`, the most recent checkpoint at or before `k`.
pub fn checkpoint_index(k: usize, q: usize) -> usize {
    assert!(k >= 1 && q >= 1, "checkpoint_index needs k ≥ 1 and q ≥ 1");
    (k - 1) / q * q + 1
}

fn is_checkpoint(k: usize, q: usize) -> bool {
    q == 1 || k % q == 1
}

/// Sums `f(sample_i)` for `i < n` in chunk order. `f` adds into its output buffer.
fn chunked_sum<P, F>(problem: &P, key: u64, n: usize, f: F) -> Vec<f64>
where
    P: StochasticProblem,
    F: Fn(&P::Sample, &mut [f64], &mut [f64]) + Sync,
{
    let d = problem.dim();
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; d];
            let mut scratch = vec![0.0; d];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = substream(key, i as u64);
                let sample = problem.draw_sample(&mut rng);
                f(&sample, &mut acc, &mut scratch);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; d];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// `(1/m) Σᵢ ∇F(x, ζᵢ)` over `m` fresh samples.
pub fn minibatch_estimate<P, R>(problem: &P, x: &[f64], m: usize, rng: &mut R) -> Result<Vec<f64>>
where
    P: StochasticProblem,
    R: Rng + ?Sized,
{
    check_len(problem.dim(), x.len())?;
    if m == 0 {
        return Err(DisfomError::InvalidArgument("batch size must be positive".into()));
    }
    let key = rng.next_u64();
    let mut sum = chunked_sum(problem, key, m, |s, acc, g| {
        problem.sample_gradient_into(x, s, g);
        for (a, gi) in acc.iter_mut().zip(g.iter()) {
            *a += gi;
        }
    });
    let inv = 1.0 / m as f64;
    sum.iter_mut().for_each(|v| *v *= inv);
    Ok(sum)
}

/// `(1/m) Σᵢ [∇F(x, ζᵢ) - ∇F(x_ref, ζᵢ)]`, each sample evaluated at both points.
pub fn correlated_difference<P, R>(problem: &P, x: &[f64], x_ref: &[f64], m: usize, rng: &mut R) -> Result<Vec<f64>>
where
    P: StochasticProblem,
    R: Rng + ?Sized,
{
    check_len(problem.dim(), x.len())?;
    check_len(problem.dim(), x_ref.len())?;
    if m == 0 {
        return Err(DisfomError::InvalidArgument("batch size must be positive".into()));
    }
    let key = rng.next_u64();
    let d = problem.dim();
    let mut sum = chunked_sum(problem, key, m, |s, acc, g| {
        let mut g_ref = vec![0.0; d];
        problem.sample_gradient_into(x, s, g);
        problem.sample_gradient_into(x_ref, s, &mut g_ref);
        for i in 0..d {
            acc[i] += g[i] - g_ref[i];
        }
    });
    let inv = 1.0 / m as f64;
    sum.iter_mut().for_each(|v| *v *= inv);
    Ok(sum)
}

/// Batch schedule of an estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Minibatch {
        batch: usize,
    },
    /// `checkpoint_batch` samples every `interval` iterations, `batch`
    /// correlated pairs in between.
    VarianceReduced {
        batch: usize,
        checkpoint_batch: usize,
        interval: usize,
    },
}

impl EstimatorKind {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EstimatorKind::Minibatch { batch } => batch >= 1,
            EstimatorKind::VarianceReduced { batch, checkpoint_batch, interval } => {
                batch >= 1 && checkpoint_batch >= 1 && interval >= 1
            }
        };
        if ok {
            Ok(())
        } else {
            Err(DisfomError::InvalidArgument(format!("batch sizes and interval must be positive: {self:?}")))
        }
    }

    /// `(samples, SFO calls)` consumed by the first `iterations` calls.
    pub fn budget(&self, iterations: usize) -> (u64, u64) {
        let k = iterations as u64;
        match *self {
            EstimatorKind::Minibatch { batch } => (k * batch as u64, k * batch as u64),
            EstimatorKind::VarianceReduced { batch, checkpoint_batch, interval } => {
                let checkpoints = k.div_ceil(interval as u64);
                let rest = k - checkpoints;
                let m1 = checkpoints * checkpoint_batch as u64;
                (m1 + rest * batch as u64, m1 + 2 * rest * batch as u64)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub k: usize,
}

/// Per-run estimator with sample and oracle-call counters.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    kind: EstimatorKind,
    anchor: Option<Anchor>,
    samples_used: u64,
    sfo_calls: u64,
}

impl EstimatorState {
    pub fn new(kind: EstimatorKind) -> Result<Self> {
        kind.validate()?;
        Ok(EstimatorState { kind, anchor: None, samples_used: 0, sfo_calls: 0 })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn anchor(&self) -> Option<&Anchor> {
        self.anchor.as_ref()
    }

    pub fn samples_used(&self) -> u64 {
        self.samples_used
    }

    pub fn sfo_calls(&self) -> u64 {
        self.sfo_calls
    }

    /// The gradient estimate `G^k` at `x_k`.
    pub fn estimate<P, R>(&mut self, problem: &P, k: usize, x_k: &[f64], rng: &mut R) -> Result<Vec<f64>>
    where
        P: StochasticProblem,
        R: Rng + ?Sized,
    {
        if k == 0 {
            return Err(DisfomError::InvalidArgument("iterations are counted from 1".into()));
        }
        check_finite("x_k", x_k)?;
        match self.kind {
            EstimatorKind::Minibatch { batch } => {
                let g = minibatch_estimate(problem, x_k, batch, rng)?;
                self.samples_used += batch as u64;
                self.sfo_calls += batch as u64;
                Ok(g)
            }
            EstimatorKind::VarianceReduced { .. } => self.vr_estimate(problem, k, x_k, rng),
        }
    }

    /// The variance-reduced estimate. At checkpoints (`k mod q = 1`) this is a
    /// minibatch of size `m₁` and becomes the new anchor; otherwise it is
    /// `G^{n_k} + (1/m) Σᵢ [∇F(x_k, ζᵢ) - ∇F(x_{n_k}, ζᵢ)]`.
    pub fn vr_estimate<P, R>(&mut self, problem: &P, k: usize, x_k: &[f64], rng: &mut R) -> Result<Vec<f64>>
    where
        P: StochasticProblem,
        R: Rng + ?Sized,
    {
        let EstimatorKind::VarianceReduced { batch, checkpoint_batch, interval } = self.kind else {
            return Err(DisfomError::State("vr_estimate called on a minibatch estimator".into()));
        };
        if k == 0 {
            return Err(DisfomError::InvalidArgument("iterations are counted from 1".into()));
        }
        if is_checkpoint(k, interval) {
            let g = minibatch_estimate(problem, x_k, checkpoint_batch, rng)?;
            self.samples_used += checkpoint_batch as u64;
            self.sfo_calls += checkpoint_batch as u64;
            self.anchor = Some(Anchor { x: x_k.to_vec(), g: g.clone(), k });
            return Ok(g);
        }
        let n_k = checkpoint_index(k, interval);
        let anchor = match &self.anchor {
            Some(a) if a.k == n_k => a,
            Some(a) => {
                return Err(DisfomError::State(format!(
                    "iteration {k} expects the anchor from iteration {n_k}, found {}",
                    a.k
                )))
            }
            None => return Err(DisfomError::State(format!("iteration {k} is off-checkpoint and no anchor exists"))),
        };
        let diff = correlated_difference(problem, x_k, &anchor.x, batch, rng)?;
        self.samples_used += batch as u64;
        self.sfo_calls += 2 * batch as u64;
        Ok(anchor.g.iter().zip(&diff).map(|(a, b)| a + b).collect())
    }
}

/// Largest per-coordinate empirical standard deviation of `∇F(x, ζ)` over
/// `n` samples, a plug-in value for `σ∞`.
pub fn estimate_sigma_inf<P, R>(problem: &P, x: &[f64], n: usize, rng: &mut R) -> Result<f64>
where
    P: StochasticProblem,
    R: Rng + ?Sized,
{
    check_len(problem.dim(), x.len())?;
    if n < 2 {
        return Err(DisfomError::InvalidArgument("need at least two pilot samples".into()));
    }
    let d = problem.dim();
    let key = rng.next_u64();
    // Accumulate sums and squared sums side by side.
    let both = chunked_sum2(problem, key, n, x);
    let nf = n as f64;
    let mut worst: f64 = 0.0;
    for i in 0..d {
        let mean = both[i] / nf;
        let var = ((both[d + i] - nf * mean * mean) / (nf - 1.0)).max(0.0);
        worst = worst.max(var.sqrt());
    }
    Ok(worst)
}

fn chunked_sum2<P: StochasticProblem>(problem: &P, key: u64, n: usize, x: &[f64]) -> Vec<f64> {
    let d = problem.dim();
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; 2 * d];
            let mut g = vec![0.0; d];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = substream(key, i as u64);
                let sample = problem.draw_sample(&mut rng);
                problem.sample_gradient_into(x, &sample, &mut g);
                for j in 0..d {
                    acc[j] += g[j];
                    acc[d + j] += g[j] * g[j];
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; 2 * d];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

//! Stochastic mirror descent with `ω(x) = (C/2)‖x‖_p²`.
//!
//! Each step maps `θ = ∇ω(x^k) - αG^k` back through `(∇ω)^{-1}` and clamps
//! the result to the box. The clamp stands in for the exact Bregman
//! projection, which couples coordinates and has no closed form.

use crate::error::check_finite;
use crate::estimator::EstimatorKind;
use crate::problem::StochasticProblem;
use crate::prox::project_box;
use crate::{DisfomError, Result};

use super::{drive, DriveOptions, NullSink, RecordSink, RunResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SmdConfig {
    pub p: f64,
    /// The scale `C` of the distance generating function.
    pub c_scale: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub estimator: EstimatorKind,
    pub seed: u64,
    pub output_seed: Option<u64>,
    pub record_history: bool,
    pub timing: bool,
}

impl SmdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(DisfomError::Config(format!("p must lie in (1, 2], got {}", self.p)));
        }
        for (name, v) in [("C", self.c_scale), ("alpha", self.alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DisfomError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.iterations == 0 {
            return Err(DisfomError::Config("iteration count must be positive".into()));
        }
        self.estimator.validate()
    }
}

/// `p = 1 + 1/ln d`, `C = e² ln d` and `α = c/√K` with
/// `c = √(f(x¹)/(ρL²))`, `ρ` the weak-convexity modulus of the problem.
pub fn preset_smd<P: StochasticProblem>(
    problem: &P,
    iterations: usize,
    estimator: EstimatorKind,
    seed: u64,
    x1: &[f64],
) -> Result<SmdConfig> {
    let ln_d = (problem.dim() as f64).ln();
    let p = 1.0 + 1.0 / ln_d;
    if !(p > 1.0 && p <= 2.0) {
        return Err(DisfomError::Config(format!("dimension {} too small for p = 1 + 1/ln d", problem.dim())));
    }
    let rho = problem
        .weak_convexity_modulus()
        .ok_or_else(|| DisfomError::Config("problem does not report a weak-convexity modulus".into()))?;
    if !(rho > 0.0) {
        return Err(DisfomError::Config(format!(
            "weak-convexity modulus must be positive for the step size, got {rho}"
        )));
    }
    let f1 = problem
        .closed_form_value(x1)
        .ok_or_else(|| DisfomError::Config("step size needs f(x1) in closed form".into()))?;
    let l = problem.lipschitz();
    let c = (f1 / (rho * l * l)).sqrt();
    Ok(SmdConfig {
        p,
        c_scale: std::f64::consts::E.powi(2) * ln_d,
        alpha: c / (iterations as f64).sqrt(),
        iterations,
        estimator,
        seed,
        output_seed: None,
        record_history: true,
        timing: false,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `∇ω(x)ᵢ = C‖x‖_p^{2-p} sign(xᵢ)|xᵢ|^{p-1}`.
pub fn mirror_map(x: &[f64], p: f64, c_scale: f64) -> Vec<f64> {
    if p == 2.0 {
        return x.iter().map(|v| c_scale * v).collect();
    }
    let m = max_abs(x);
    if m == 0.0 {
        return vec![0.0; x.len()];
    }
    // Factor out the largest magnitude so the powers stay in range.
    let norm = x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p);
    let scale = c_scale * m * norm.powf(2.0 - p);
    x.iter().map(|v| scale * (v.abs() / m).powf(p - 1.0) * v.signum()).collect()
}

/// `(∇ω)^{-1}(θ)ᵢ = sign(θᵢ)|θᵢ|^{q-1}‖θ‖_q^{2-q}/C` with `1/p + 1/q = 1`.
pub fn dual_map(theta: &[f64], p: f64, c_scale: f64) -> Vec<f64> {
    if p == 2.0 {
        return theta.iter().map(|v| v / c_scale).collect();
    }
    let q = p / (p - 1.0);
    let m = max_abs(theta);
    if m == 0.0 {
        return vec![0.0; theta.len()];
    }
    let norm = theta.iter().map(|v| (v.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q);
    let scale = m * norm.powf(2.0 - q) / c_scale;
    theta.iter().map(|v| scale * (v.abs() / m).powf(q - 1.0) * v.signum()).collect()
}

pub fn run_smd<P: StochasticProblem>(problem: &P, cfg: &SmdConfig, x1: &[f64]) -> Result<RunResult> {
    run_smd_with_sink(problem, cfg, x1, &mut NullSink)
}

pub fn run_smd_with_sink<P: StochasticProblem>(
    problem: &P,
    cfg: &SmdConfig,
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
        constrained: true,
    };
    drive(problem, &opts, cfg.estimator, x1, sink, |x, g| {
        let mut theta = mirror_map(x, cfg.p, cfg.c_scale);
        for (t, gi) in theta.iter_mut().zip(g) {
            *t -= cfg.alpha * gi;
        }
        let z = dual_map(&theta, cfg.p, cfg.c_scale);
        check_finite("mirror step", &z)?;
        Ok((project_box(&z, radius), 0))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn maps_are_mutual_inverses() {
        let mut rng = crate::rng::substream(11, 0);
        for &p in &[1.05, 1.1443, 1.5, 2.0] {
            for _ in 0..50 {
                let x: Vec<f64> = (0..64).map(|_| rng.random_range(-3.0..3.0)).collect();
                let back = dual_map(&mirror_map(&x, p, 51.19), p, 51.19);
                let n = max_abs(&x);
                for (a, b) in x.iter().zip(&back) {
                    assert!((a - b).abs() <= 1e-10 * n, "p = {p}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        assert_eq!(mirror_map(&[0.0; 3], 1.2, 2.0), vec![0.0; 3]);
        assert_eq!(dual_map(&[0.0; 3], 1.2, 2.0), vec![0.0; 3]);
    }

    #[test]
    fn tiny_entries_do_not_underflow_the_norm() {
        let x = [1e-200, -3e-201];
        let back = dual_map(&mirror_map(&x, 1.1, 7.0), 1.1, 7.0);
        assert!((back[0] - x[0]).abs() <= 1e-10 * 1e-200);
    }

    #[test]
    fn preset_values_at_d1024() {
        let qp = crate::problem::SyntheticQP::generate(1024, 3, 3.0, 3.0, 2.5).unwrap();
        let cfg = preset_smd(&qp, 100, EstimatorKind::Minibatch { batch: 10 }, 0, &vec![0.0; 1024]).unwrap();
        assert!((cfg.p - 1.1443).abs() < 5e-5);
        // e² = 7.389056..., ln 1024 = 6.931471...
        assert!((cfg.c_scale - 51.2171).abs() < 1e-3);
        let rho = 1.25 - qp.trunc_var();
        let f1 = qp.value(&vec![0.0; 1024]).unwrap();
        let c = (f1 / (rho * qp.lipschitz().powi(2))).sqrt();
        assert!((cfg.alpha - c / 10.0).abs() < 1e-15);
    }

    #[test]
    fn preset_rejects_convex_regularization() {
        let qp = crate::problem::SyntheticQP::generate(16, 3, 3.0, 3.0, 1.0).unwrap();
        assert!(preset_smd(&qp, 10, EstimatorKind::Minibatch { batch: 1 }, 0, &[0.0; 16]).is_err());
    }
}

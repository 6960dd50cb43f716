//! Parameter choices that attain an `ε`-stationary point in expectation.
//!
//! All four presets use `η = 1/L`, `K = ⌈ΔL/ε²⌉`, `ε̂ = ε/L`, and a base batch
//! `⌈6 log(2d) σ∞²/ε²⌉`. The variance-reduced ones refresh every
//! `q = ⌈m₁^{1/3}⌉` iterations and use `m = q²` correlated pairs in between.

use crate::estimator::EstimatorKind;
use crate::prox::ProxKind;
use crate::{DisfomError, Result};

use super::DisfomConfig;

/// Problem quantities a preset is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetInputs {
    pub epsilon: f64,
    /// `f(x¹) - inf f`, or an upper bound on it.
    pub delta: f64,
    pub lipschitz: f64,
    pub dim: usize,
    /// Sub-Gaussian parameter `σ∞` (not squared) of the gradient noise.
    pub sigma_inf: f64,
}

impl PresetInputs {
    fn validate(&self) -> Result<()> {
        for (name, v) in
            [("epsilon", self.epsilon), ("delta", self.delta), ("L", self.lipschitz), ("sigma_inf", self.sigma_inf)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DisfomError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dim == 0 {
            return Err(DisfomError::Config("dimension must be positive".into()));
        }
        Ok(())
    }

    fn iterations(&self) -> usize {
        (self.delta * self.lipschitz / (self.epsilon * self.epsilon)).ceil() as usize
    }

    fn base_batch(&self) -> usize {
        let c = 6.0 * (2.0 * self.dim as f64).ln();
        (c * self.sigma_inf * self.sigma_inf / (self.epsilon * self.epsilon)).ceil().max(1.0) as usize
    }

    fn epsilon_hat(&self) -> f64 {
        self.epsilon / self.lipschitz
    }
}

/// Constants that only enter the convergence analysis. Stored for reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConstants {
    pub gamma: f64,
    pub tau: f64,
    pub t: f64,
}

fn build(inputs: &PresetInputs, estimator: EstimatorKind, prox: ProxKind, analysis: AnalysisConstants) -> DisfomConfig {
    let mut cfg = DisfomConfig::new(1.0 / inputs.lipschitz, inputs.iterations(), estimator, prox);
    cfg.admm.epsilon_hat = inputs.epsilon_hat();
    cfg.analysis = Some(analysis);
    cfg
}

fn vr_schedule(m1: usize) -> EstimatorKind {
    let mut q = (m1 as f64).cbrt().ceil() as usize;
    // cbrt can land just above an exact cube
    if q > 1 && (q - 1).pow(3) >= m1 {
        q -= 1;
    }
    EstimatorKind::VarianceReduced { batch: q * q, checkpoint_batch: m1, interval: q }
}

/// `(ρ̂/2)‖·‖₁²` proximal term with minibatch gradients.
pub fn preset_case1_minibatch(inputs: &PresetInputs, rho_hat: f64) -> Result<DisfomConfig> {
    inputs.validate()?;
    let prox = ProxKind::L1SquaredPenalty { rho_hat };
    prox.validate()?;
    let eta = 1.0 / inputs.lipschitz;
    let analysis = AnalysisConstants { gamma: 0.5, tau: 1.0 / inputs.lipschitz, t: 2.0 * eta / rho_hat };
    Ok(build(inputs, EstimatorKind::Minibatch { batch: inputs.base_batch() }, prox, analysis))
}

/// `(ρ̂/2)‖·‖₁²` proximal term with `ρ̂ = 128` and variance-reduced gradients.
pub fn preset_case1_vr(inputs: &PresetInputs) -> Result<DisfomConfig> {
    inputs.validate()?;
    let l = inputs.lipschitz;
    let analysis = AnalysisConstants { gamma: 0.5, tau: 1.0 / (64.0 * l), t: 1.0 / (64.0 * l) };
    Ok(build(inputs, vr_schedule(inputs.base_batch()), ProxKind::L1SquaredPenalty { rho_hat: 128.0 }, analysis))
}

/// ℓ1-ball proximal term of radius `ψ = 2ε̂` with minibatch gradients.
pub fn preset_case2_minibatch(inputs: &PresetInputs) -> Result<DisfomConfig> {
    inputs.validate()?;
    let l = inputs.lipschitz;
    let analysis = AnalysisConstants { gamma: 0.5, tau: 1.0 / l, t: 1.0 / l };
    let prox = ProxKind::L1BallIndicator { psi: 2.0 * inputs.epsilon_hat() };
    Ok(build(inputs, EstimatorKind::Minibatch { batch: inputs.base_batch() }, prox, analysis))
}

/// ℓ1-ball proximal term of radius `ψ = 2ε̂` with variance-reduced gradients.
pub fn preset_case2_vr(inputs: &PresetInputs) -> Result<DisfomConfig> {
    inputs.validate()?;
    let l = inputs.lipschitz;
    let analysis = AnalysisConstants { gamma: 0.5, tau: 1.0 / (64.0 * l), t: 1.0 / (64.0 * l) };
    let prox = ProxKind::L1BallIndicator { psi: 2.0 * inputs.epsilon_hat() };
    Ok(build(inputs, vr_schedule(inputs.base_batch()), prox, analysis))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> PresetInputs {
        PresetInputs { epsilon: 0.1, delta: 1.0, lipschitz: 2.0, dim: 128, sigma_inf: 1.0 }
    }

    #[test]
    fn case1_minibatch_formulas() {
        let cfg = preset_case1_minibatch(&inputs(), 2.0).unwrap();
        assert_eq!(cfg.eta, 0.5);
        assert_eq!(cfg.iterations, 200);
        assert_eq!(cfg.epsilon_hat(), 0.05);
        let m = (6.0 * 256f64.ln() / 0.01).ceil() as usize;
        assert_eq!(cfg.estimator, EstimatorKind::Minibatch { batch: m });
        let a = cfg.analysis.unwrap();
        assert_eq!((a.gamma, a.tau, a.t), (0.5, 0.5, 0.5));
    }

    #[test]
    fn case1_vr_consistency() {
        let cfg = preset_case1_vr(&inputs()).unwrap();
        let a = cfg.analysis.unwrap();
        assert_eq!(cfg.prox, ProxKind::L1SquaredPenalty { rho_hat: 128.0 });
        // t = 2η/ρ̂ at ρ̂ = 128, η = 1/L
        assert!((a.t * 128.0 - 2.0 * cfg.eta).abs() < 1e-15);
        let EstimatorKind::VarianceReduced { batch, checkpoint_batch, interval } = cfg.estimator else { panic!() };
        assert_eq!(batch, interval * interval);
        assert!(interval.pow(3) >= checkpoint_batch && (interval - 1).pow(3) < checkpoint_batch);
    }

    #[test]
    fn exact_cube_batch() {
        assert_eq!(
            vr_schedule(1000),
            EstimatorKind::VarianceReduced { batch: 100, checkpoint_batch: 1000, interval: 10 }
        );
        assert_eq!(
            vr_schedule(1001),
            EstimatorKind::VarianceReduced { batch: 121, checkpoint_batch: 1001, interval: 11 }
        );
        assert_eq!(vr_schedule(1), EstimatorKind::VarianceReduced { batch: 1, checkpoint_batch: 1, interval: 1 });
    }

    #[test]
    fn case2_radius_is_twice_accuracy() {
        for cfg in [preset_case2_minibatch(&inputs()).unwrap(), preset_case2_vr(&inputs()).unwrap()] {
            assert_eq!(cfg.prox, ProxKind::L1BallIndicator { psi: 0.1 });
            assert_eq!(cfg.iterations, 200);
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let mut i = inputs();
        i.epsilon = 0.0;
        assert!(preset_case1_vr(&i).is_err());
        assert!(preset_case1_minibatch(&inputs(), -1.0).is_err());
    }
}

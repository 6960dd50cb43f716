//! Sweep configuration files.
//!
//! ```toml
//! base_seed = 20240501
//! dims = [128, 256]
//! replications = 3
//! output_dir = "results"
//!
//! [problem]
//! radius = 3.0
//! truncation = 3.0
//! lambda_reg = 2.5
//!
//! [solvers.disfom_minibatch]
//! method = "disfom"
//! prox = "l1_squared"
//! rho_hat = 2.0
//! estimator = "minibatch"
//! batch = 1000
//! iterations = 300
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use disfom::estimator::EstimatorKind;
use disfom::prox::ProxKind;
use serde::Deserialize;

use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base_seed: u64,
    pub dims: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Record wall-clock time per iteration. Breaks byte-for-byte reproducibility.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub problem: ProblemParams,
    /// Solvers keyed by the name used in the CSVs.
    pub solvers: BTreeMap<String, SolverSpec>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub radius: f64,
    pub truncation: f64,
    pub lambda_reg: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        ProblemParams { radius: 3.0, truncation: 3.0, lambda_reg: 2.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Disfom,
    Sgd,
    Svrg,
    Smd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorName {
    Minibatch,
    Vr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxName {
    L1Squared,
    L1Ball,
    None,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub method: Method,
    pub estimator: EstimatorName,
    pub iterations: usize,
    pub batch: usize,
    pub checkpoint_batch: Option<usize>,
    pub interval: Option<usize>,
    /// `η = step_scale / L`. Defaults to 0.1 for SVRG and 1 otherwise.
    pub step_scale: Option<f64>,
    pub prox: Option<ProxName>,
    pub rho_hat: Option<f64>,
    pub psi: Option<f64>,
    #[serde(default = "default_epsilon_hat")]
    pub epsilon_hat: f64,
    #[serde(default = "default_admm_penalty")]
    pub admm_penalty: f64,
    #[serde(default = "default_admm_max_iter")]
    pub admm_max_iter: usize,
}

fn default_epsilon_hat() -> f64 {
    1e-6
}
fn default_admm_penalty() -> f64 {
    1.0
}
fn default_admm_max_iter() -> usize {
    10_000
}

fn bad(msg: impl Into<String>) -> BenchError {
    BenchError::Usage(msg.into())
}

impl SolverSpec {
    pub fn estimator_kind(&self) -> Result<EstimatorKind, BenchError> {
        let kind = match self.estimator {
            EstimatorName::Minibatch => EstimatorKind::Minibatch { batch: self.batch },
            EstimatorName::Vr => EstimatorKind::VarianceReduced {
                batch: self.batch,
                checkpoint_batch: self.checkpoint_batch.ok_or_else(|| bad("vr estimator needs checkpoint_batch"))?,
                interval: self.interval.ok_or_else(|| bad("vr estimator needs interval"))?,
            },
        };
        kind.validate().map_err(|e| bad(e.to_string()))?;
        Ok(kind)
    }

    pub fn prox_kind(&self) -> Result<ProxKind, BenchError> {
        let kind = match (self.method, self.prox) {
            (Method::Disfom, Some(ProxName::L1Squared)) => {
                ProxKind::L1SquaredPenalty { rho_hat: self.rho_hat.ok_or_else(|| bad("l1_squared needs rho_hat"))? }
            }
            (Method::Disfom, Some(ProxName::L1Ball)) => {
                ProxKind::L1BallIndicator { psi: self.psi.ok_or_else(|| bad("l1_ball needs psi"))? }
            }
            (Method::Disfom, Some(ProxName::None)) => ProxKind::EuclideanNone,
            (Method::Disfom, None) => return Err(bad("disfom needs prox")),
            (_, None | Some(ProxName::None)) => ProxKind::EuclideanNone,
            (m, Some(p)) => return Err(bad(format!("{m:?} does not take prox {p:?}"))),
        };
        kind.validate().map_err(|e| bad(e.to_string()))?;
        Ok(kind)
    }

    pub fn step_scale(&self) -> f64 {
        self.step_scale.unwrap_or(if self.method == Method::Svrg { 0.1 } else { 1.0 })
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.iterations == 0 {
            return Err(bad("iterations must be positive"));
        }
        self.estimator_kind()?;
        self.prox_kind()?;
        if self.method == Method::Svrg && self.estimator != EstimatorName::Vr {
            return Err(bad("svrg uses the vr estimator"));
        }
        if self.method == Method::Sgd && self.estimator != EstimatorName::Minibatch {
            return Err(bad("sgd uses the minibatch estimator"));
        }
        let s = self.step_scale();
        if !(s > 0.0 && s.is_finite()) {
            return Err(bad(format!("step_scale must be positive, got {s}")));
        }
        if !(self.epsilon_hat > 0.0) || !(self.admm_penalty > 0.0) || self.admm_max_iter == 0 {
            return Err(bad("epsilon_hat, admm_penalty and admm_max_iter must be positive"));
        }
        Ok(())
    }
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| bad(format!("config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.dims.is_empty() {
            return Err(bad("dims must not be empty"));
        }
        if let Some(d) = self.dims.iter().find(|&&d| d == 0 || d % 16 != 0) {
            return Err(bad(format!("dimension {d} is not a positive multiple of 16")));
        }
        let mut sorted = self.dims.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.dims.len() {
            return Err(bad("dims contain duplicates"));
        }
        if self.replications == 0 {
            return Err(bad("replications must be at least 1"));
        }
        if self.solvers.is_empty() {
            return Err(bad("no solvers configured"));
        }
        let p = self.problem;
        if !(p.radius > 0.0 && p.truncation > 0.0 && p.lambda_reg > 0.0) {
            return Err(bad("problem parameters must be positive"));
        }
        for (name, s) in &self.solvers {
            if name.is_empty() || name.contains([',', '"', '\n']) {
                return Err(bad(format!("solver name {name:?} cannot be used as a CSV field")));
            }
            s.validate().map_err(|e| bad(format!("solver {name}: {e}")))?;
        }
        Ok(())
    }

    /// The desk-scale grid shipped as `configs/desk.toml`.
    pub fn desk_default() -> Self {
        SweepSpec::from_toml(DESK_TOML).expect("built-in config is valid")
    }
}

pub const DESK_TOML: &str = include_str!("../../../configs/desk.toml");

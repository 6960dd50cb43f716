//! Seeds, reference values, and dispatch of one solver run.

use disfom::admm::AdmmConfig;
use disfom::metrics::{box_stationarity_residual, relative_gap};
use disfom::problem::{StochasticProblem, SyntheticQP};
use disfom::rng::{derive_seed, splitmix64};
use disfom::solvers::{
    preset_smd, projected_gradient_backtracking, run_disfom_with_sink, run_smd_with_sink, DisfomConfig, RecordSink,
    RunResult,
};

use crate::spec::{Method, SolverSpec};
use crate::Result;

/// Instance seed for cell `(d, replication)`. Distinct cells never collide:
/// the packed pair is injective for `d, replication < 2³²` and splitmix64 is
/// a bijection.
pub fn instance_seed(base_seed: u64, d: usize, replication: usize) -> u64 {
    base_seed ^ splitmix64(((d as u64) << 32) | replication as u64)
}

/// FNV-1a, stable across platforms and compiler versions.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of solver `name` on the instance with seed `instance_seed`.
pub fn run_seed(instance_seed: u64, name: &str) -> u64 {
    derive_seed(instance_seed, name_hash(name))
}

/// `f*` and the normalizer `Δ = f(x¹) - f*` for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub f_star: f64,
    pub delta: f64,
    /// Stationarity residual at the reference point.
    pub residual: f64,
}

impl Reference {
    pub fn compute(problem: &SyntheticQP, x1: &[f64]) -> Result<Self> {
        let sol = projected_gradient_backtracking(problem, x1)?;
        let g = problem.gradient(&sol.x_star)?;
        let residual = box_stationarity_residual(&g, &sol.x_star, problem.box_radius())?;
        let delta = problem.value(x1)? - sol.f_star;
        Ok(Reference { f_star: sol.f_star, delta, residual })
    }

    pub fn gap(&self, f: f64) -> f64 {
        if self.delta > 0.0 {
            relative_gap(f, self.f_star, self.delta).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        }
    }
}

/// The core configuration a `SolverSpec` describes on a given problem.
pub fn disfom_config(problem: &SyntheticQP, spec: &SolverSpec, seed: u64, timing: bool) -> Result<DisfomConfig> {
    let eta = spec.step_scale() / problem.lipschitz();
    let mut cfg = DisfomConfig::new(eta, spec.iterations, spec.estimator_kind()?, spec.prox_kind()?);
    cfg.admm = AdmmConfig { penalty: spec.admm_penalty, epsilon_hat: spec.epsilon_hat, max_iter: spec.admm_max_iter };
    cfg.seed = seed;
    cfg.timing = timing;
    Ok(cfg)
}

pub fn run_solver(
    problem: &SyntheticQP,
    spec: &SolverSpec,
    seed: u64,
    x1: &[f64],
    timing: bool,
    sink: &mut dyn RecordSink,
) -> Result<RunResult> {
    spec.validate()?;
    let res = match spec.method {
        Method::Disfom | Method::Sgd | Method::Svrg => {
            run_disfom_with_sink(problem, &disfom_config(problem, spec, seed, timing)?, x1, sink)?
        }
        Method::Smd => {
            let mut cfg = preset_smd(problem, spec.iterations, spec.estimator_kind()?, seed, x1)?;
            cfg.alpha *= spec.step_scale.unwrap_or(1.0);
            cfg.timing = timing;
            run_smd_with_sink(problem, &cfg, x1, sink)?
        }
    };
    Ok(res)
}

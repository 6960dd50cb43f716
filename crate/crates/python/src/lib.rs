//! Python bindings. Vectors cross the boundary as lists of floats.

use disfom::error::DisfomError;
use disfom::estimator::EstimatorKind;
use disfom::metrics;
use disfom::problem::{read_instance, write_instance, StochasticProblem, SyntheticQP};
use disfom::prox::{self, ProxKind};
use disfom::solvers::{self, DisfomConfig, RunResult};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: DisfomError) -> PyErr {
    match e {
        DisfomError::NotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A synthetic nonconvex stochastic quadratic on the box `[-R, R]^d`.
#[pyclass(name = "SyntheticQP", module = "pydisfom", frozen)]
pub struct PySyntheticQP {
    inner: SyntheticQP,
}

#[pymethods]
impl PySyntheticQP {
    #[new]
    #[pyo3(signature = (d, seed=0, radius=3.0, truncation=3.0, lambda_reg=2.5))]
    fn new(d: usize, seed: u64, radius: f64, truncation: f64, lambda_reg: f64) -> PyResult<Self> {
        let inner = SyntheticQP::generate(d, seed, radius, truncation, lambda_reg).map_err(to_py)?;
        Ok(PySyntheticQP { inner })
    }

    /// Reads an instance written by `to_bytes` or `disfom generate`.
    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PySyntheticQP { inner: read_instance(data).map_err(to_py)? })
    }

    fn to_bytes(&self) -> PyResult<Vec<u8>> {
        let mut buf = Vec::new();
        write_instance(&self.inner, &mut buf).map_err(to_py)?;
        Ok(buf)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.box_radius()
    }

    #[getter]
    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz()
    }

    #[getter]
    fn x_true(&self) -> Vec<f64> {
        self.inner.x_true().to_vec()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.value(&x).map_err(to_py)
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.gradient(&x).map_err(to_py)
    }

    /// Box stationarity residual of `x`.
    fn residual(&self, x: Vec<f64>) -> PyResult<f64> {
        let g = self.inner.gradient(&x).map_err(to_py)?;
        metrics::box_stationarity_residual(&g, &x, self.inner.box_radius()).map_err(to_py)
    }

    /// Analytic bound on the sub-Gaussian parameter of the gradient noise at `x`.
    fn subgaussian_bound(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.subgaussian_bound(&x).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("SyntheticQP(d={}, L={:.4})", self.inner.dim(), self.inner.lipschitz())
    }
}

/// Outcome of one stochastic run.
#[pyclass(name = "RunResult", module = "pydisfom", frozen, get_all)]
pub struct PyRunResult {
    /// The randomly indexed output iterate.
    x_out: Vec<f64>,
    x_final: Vec<f64>,
    output_index: usize,
    total_sfo: u64,
    /// `(k, f, residual, sfo_calls)` per iteration.
    history: Vec<(usize, f64, f64, u64)>,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(iterations={}, output_index={}, total_sfo={})",
            self.history.len(),
            self.output_index,
            self.total_sfo
        )
    }
}

impl From<RunResult> for PyRunResult {
    fn from(r: RunResult) -> Self {
        PyRunResult {
            history: r.history.iter().map(|h| (h.k, h.f_value, h.residual, h.sfo_calls)).collect(),
            x_out: r.x_out,
            x_final: r.x_final,
            output_index: r.output_index,
            total_sfo: r.total_sfo,
        }
    }
}

fn estimator(batch: usize, checkpoint_batch: Option<usize>, interval: Option<usize>) -> PyResult<EstimatorKind> {
    match (checkpoint_batch, interval) {
        (None, None) => Ok(EstimatorKind::Minibatch { batch }),
        (Some(checkpoint_batch), Some(interval)) => {
            Ok(EstimatorKind::VarianceReduced { batch, checkpoint_batch, interval })
        }
        _ => Err(PyValueError::new_err("checkpoint_batch and interval must be given together")),
    }
}

fn prox_kind(rho_hat: Option<f64>, psi: Option<f64>) -> PyResult<ProxKind> {
    match (rho_hat, psi) {
        (Some(rho_hat), None) => Ok(ProxKind::L1SquaredPenalty { rho_hat }),
        (None, Some(psi)) => Ok(ProxKind::L1BallIndicator { psi }),
        (None, None) => Ok(ProxKind::EuclideanNone),
        _ => Err(PyValueError::new_err("give at most one of rho_hat and psi")),
    }
}

fn start(problem: &SyntheticQP, x1: Option<Vec<f64>>) -> Vec<f64> {
    x1.unwrap_or_else(|| vec![0.0; problem.dim()])
}

/// Runs the proximal method. Without `rho_hat` or `psi` this is projected
/// SGD (or SVRG when `checkpoint_batch` and `interval` are set).
#[pyfunction]
#[pyo3(signature = (problem, iterations, batch, *, eta=None, rho_hat=None, psi=None, checkpoint_batch=None, interval=None, epsilon_hat=1e-6, seed=0, x1=None))]
#[allow(clippy::too_many_arguments)]
fn run_disfom(
    py: Python<'_>,
    problem: &PySyntheticQP,
    iterations: usize,
    batch: usize,
    eta: Option<f64>,
    rho_hat: Option<f64>,
    psi: Option<f64>,
    checkpoint_batch: Option<usize>,
    interval: Option<usize>,
    epsilon_hat: f64,
    seed: u64,
    x1: Option<Vec<f64>>,
) -> PyResult<PyRunResult> {
    let p = &problem.inner;
    let eta = eta.unwrap_or(1.0 / p.lipschitz());
    let mut cfg =
        DisfomConfig::new(eta, iterations, estimator(batch, checkpoint_batch, interval)?, prox_kind(rho_hat, psi)?);
    cfg.admm.epsilon_hat = epsilon_hat;
    cfg.seed = seed;
    let x1 = start(p, x1);
    let res = py.detach(|| solvers::run_disfom(p, &cfg, &x1)).map_err(to_py)?;
    Ok(res.into())
}

/// Runs stochastic mirror descent with its default `p`, `C` and step size.
#[pyfunction]
#[pyo3(signature = (problem, iterations, batch, *, checkpoint_batch=None, interval=None, seed=0, x1=None))]
#[allow(clippy::too_many_arguments)]
fn run_smd(
    py: Python<'_>,
    problem: &PySyntheticQP,
    iterations: usize,
    batch: usize,
    checkpoint_batch: Option<usize>,
    interval: Option<usize>,
    seed: u64,
    x1: Option<Vec<f64>>,
) -> PyResult<PyRunResult> {
    let p = &problem.inner;
    let x1 = start(p, x1);
    let cfg =
        solvers::preset_smd(p, iterations, estimator(batch, checkpoint_batch, interval)?, seed, &x1).map_err(to_py)?;
    let res = py.detach(|| solvers::run_smd(p, &cfg, &x1)).map_err(to_py)?;
    Ok(res.into())
}

/// Deterministic projected gradient with backtracking; returns `(f*, x*)`.
#[pyfunction]
#[pyo3(signature = (problem, x0=None))]
fn reference_solution(py: Python<'_>, problem: &PySyntheticQP, x0: Option<Vec<f64>>) -> PyResult<(f64, Vec<f64>)> {
    let p = &problem.inner;
    let x0 = start(p, x0);
    let sol = py.detach(|| solvers::projected_gradient_backtracking(p, &x0)).map_err(to_py)?;
    Ok((sol.f_star, sol.x_star))
}

/// `argmin_z ½‖z - v‖² + (ρ̂/2)‖z‖₁²`.
#[pyfunction]
fn prox_l1_squared(v: Vec<f64>, rho_hat: f64) -> PyResult<Vec<f64>> {
    prox::prox_l1_squared(&v, rho_hat).map_err(to_py)
}

/// Euclidean projection onto `{‖z‖₁ ≤ ψ}`.
#[pyfunction]
fn project_l1_ball(v: Vec<f64>, psi: f64) -> PyResult<Vec<f64>> {
    prox::project_l1_ball(&v, psi).map_err(to_py)
}

#[pyfunction]
fn box_stationarity_residual(g: Vec<f64>, x: Vec<f64>, radius: f64) -> PyResult<f64> {
    metrics::box_stationarity_residual(&g, &x, radius).map_err(to_py)
}

#[pymodule]
fn pydisfom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySyntheticQP>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run_disfom, m)?)?;
    m.add_function(wrap_pyfunction!(run_smd, m)?)?;
    m.add_function(wrap_pyfunction!(reference_solution, m)?)?;
    m.add_function(wrap_pyfunction!(prox_l1_squared, m)?)?;
    m.add_function(wrap_pyfunction!(project_l1_ball, m)?)?;
    m.add_function(wrap_pyfunction!(box_stationarity_residual, m)?)?;
    Ok(())
}

//! Stochastic problems `min_{x ∈ [-R, R]^d} E[F(x, ζ)]`.

mod io;
mod synthetic;
mod truncnorm;

pub use io::{read_instance, write_instance, INSTANCE_MAGIC};
pub use synthetic::{Sample, SyntheticQP};
pub use truncnorm::{sample_truncated_normal, truncated_normal_variance};

use rand::Rng;

/// A stochastic objective over the box `[-R, R]^d` reachable through a
/// stochastic first-order oracle.
///
/// `sample_gradient` must be an unbiased estimate of the true gradient at
/// every feasible point, and the objective must be bounded below by
/// `lower_bound` on the box.
pub trait StochasticProblem: Sync {
    /// One realization of the random data ζ.
    type Sample: Send;

    fn dim(&self) -> usize;

    fn box_radius(&self) -> f64;

    /// Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;

    fn lower_bound(&self) -> f64;

    fn draw_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Sample;

    /// Writes `∇F(x, sample)` into `out`. Callers guarantee `x.len() == out.len() == dim()`.
    fn sample_gradient_into(&self, x: &[f64], sample: &Self::Sample, out: &mut [f64]);

    fn closed_form_value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn closed_form_gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Weak-convexity modulus `ρ` used by the mirror-descent step size,
    /// when the problem knows it.
    fn weak_convexity_modulus(&self) -> Option<f64> {
        None
    }
}

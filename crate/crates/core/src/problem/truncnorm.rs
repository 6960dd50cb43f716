use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erf;

use crate::{DisfomError, Result};

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Variance of a standard normal conditioned on `[-u, u]`:
/// `1 - (2u/√(2π)) e^{-u²/2} / (Φ(u) - Φ(-u))`.
pub fn truncated_normal_variance(u: f64) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(DisfomError::InvalidArgument(format!("truncation width must be positive and finite, got {u}")));
    }
    let mass = std_normal_cdf(u) - std_normal_cdf(-u);
    let tail = 2.0 * u / (2.0 * PI).sqrt() * (-0.5 * u * u).exp();
    Ok(1.0 - tail / mass)
}

/// Draws from `N(0, 1)` conditioned on `[-u, u]` by rejection.
///
/// Acceptance is `Φ(u) - Φ(-u)`; very small `u` makes this slow.
pub fn sample_truncated_normal<R: Rng + ?Sized>(u: f64, rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= u {
            return z;
        }
    }
}

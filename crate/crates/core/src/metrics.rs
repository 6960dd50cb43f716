//! Stationarity residual over a box and the relative function gap.

use crate::error::check_len;
use crate::{DisfomError, Result};

/// Relative tolerance used to decide that a coordinate sits on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// `dist∞(0, ∇f(x) + N_box(x))` for the box `[-R, R]^d`.
///
/// The normal cone of a box splits by coordinate, so the distance is the
/// largest per-coordinate distance: `|gᵢ|` for interior coordinates,
/// `max(gᵢ, 0)` at `xᵢ = R` and `max(-gᵢ, 0)` at `xᵢ = -R`. A coordinate
/// within `1e-9·R` of a face counts as on it.
pub fn box_stationarity_residual(g: &[f64], x: &[f64], radius: f64) -> Result<f64> {
    check_len(x.len(), g.len())?;
    if !(radius > 0.0) {
        return Err(DisfomError::InvalidArgument(format!("box radius must be positive, got {radius}")));
    }
    let tol = BOUNDARY_TOL * radius;
    let mut worst: f64 = 0.0;
    for (i, (&gi, &xi)) in g.iter().zip(x).enumerate() {
        if !(xi.abs() <= radius + tol) {
            return Err(DisfomError::InvalidArgument(format!("x[{i}] = {xi} lies outside the box of radius {radius}")));
        }
        let r = if xi >= radius - tol {
            gi.max(0.0)
        } else if xi <= -radius + tol {
            (-gi).max(0.0)
        } else {
            gi.abs()
        };
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `(f(x) - f*) / Δ`.
pub fn relative_gap(f_x: f64, f_star: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(DisfomError::InvalidArgument(format!("gap normalizer must be positive, got {delta}")));
    }
    Ok((f_x - f_star) / delta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    pub k: usize,
    pub residual: f64,
    pub f_gap: f64,
}

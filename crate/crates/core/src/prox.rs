//! Closed-form proximal maps for the non-Euclidean proximal terms and the
//! Euclidean box, plus subgradient membership checks.

use std::cmp::Ordering;

use crate::error::{check_finite, check_len};
use crate::{DisfomError, Result};

/// Which proximal term `φ` is added to the Euclidean distance in the
/// projection step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxKind {
    /// `φ(z) = (ρ̂/2)‖z‖₁²`.
    L1SquaredPenalty { rho_hat: f64 },
    /// `φ(z)` is the indicator of `{‖z‖₁ ≤ ψ}`.
    L1BallIndicator { psi: f64 },
    /// `φ ≡ 0`.
    EuclideanNone,
}

impl ProxKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProxKind::L1SquaredPenalty { rho_hat } if !(rho_hat > 0.0 && rho_hat.is_finite()) => {
                Err(DisfomError::InvalidArgument(format!("rho_hat must be positive, got {rho_hat}")))
            }
            ProxKind::L1BallIndicator { psi } if !(psi > 0.0 && psi.is_finite()) => {
                Err(DisfomError::InvalidArgument(format!("psi must be positive, got {psi}")))
            }
            _ => Ok(()),
        }
    }

    /// `argmin_z ½‖z - v‖² + φ(z)/scale`.
    ///
    /// Indicators are invariant under positive scaling, so only the penalty
    /// sees `scale`.
    pub(crate) fn prox_scaled(&self, v: &[f64], scale: f64) -> Vec<f64> {
        match *self {
            ProxKind::L1SquaredPenalty { rho_hat } => l1_squared_prox(v, rho_hat / scale),
            ProxKind::L1BallIndicator { psi } => l1_ball_projection(v, psi),
            ProxKind::EuclideanNone => v.to_vec(),
        }
    }
}

/// `(|v|, index)` order, ascending.
fn magnitude_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    idx
}

/// The unique minimizer of `½‖z - v‖² + (ρ̂/2)‖z‖₁²`.
///
/// Sorts `|v|` ascending as `a₁ ≤ … ≤ a_d` (with `a₀ = 0`) and scans
/// `s_k = Σ_{t<k} a_t + ((d-k+1)ρ̂ + 1)/ρ̂ · a_k` for the `k̄` with
/// `s_k̄ ≤ ‖v‖₁ < s_{k̄+1}`. The `k̄` smallest entries are zeroed and the rest
/// are shrunk toward zero by `ρ̂ Σ_{t>k̄} a_t / (ρ̂(d-k̄) + 1)`, which equals
/// `ρ̂‖z*‖₁`.
pub fn prox_l1_squared(v: &[f64], rho_hat: f64) -> Result<Vec<f64>> {
    ProxKind::L1SquaredPenalty { rho_hat }.validate()?;
    check_finite("v", v)?;
    Ok(l1_squared_prox(v, rho_hat))
}

pub(crate) fn l1_squared_prox(v: &[f64], rho_hat: f64) -> Vec<f64> {
    let d = v.len();
    let order = magnitude_order(v);
    let a: Vec<f64> = order.iter().map(|&i| v[i].abs()).collect();
    let total: f64 = a.iter().sum();
    if total == 0.0 {
        return vec![0.0; d];
    }

    // k̄ is the largest k in 0..d with s_k ≤ ‖v‖₁; s_0 = 0 always qualifies.
    let mut k_bar = 0;
    let mut prefix = 0.0; // Σ_{t<k} a_t, with a_0 = 0
    let mut prev_s = 0.0;
    for k in 1..=d {
        let ak = a[k - 1];
        let s_k = prefix + ((d - k + 1) as f64 * rho_hat + 1.0) / rho_hat * ak;
        debug_assert!(s_k >= prev_s - 1e-9 * total, "s_k must be non-decreasing");
        prev_s = s_k;
        if s_k <= total {
            k_bar = k;
        } else {
            break;
        }
        prefix += ak;
    }
    debug_assert!(k_bar < d, "‖v‖₁ < s_d must hold");

    let tail: f64 = a[k_bar..].iter().sum();
    let shrink = rho_hat * tail / (rho_hat * (d - k_bar) as f64 + 1.0);
    let mut z = vec![0.0; d];
    for &i in &order[k_bar..] {
        let mag = (v[i].abs() - shrink).max(0.0);
        z[i] = mag.copysign(v[i]);
    }
    z
}

/// Euclidean projection onto `{z : ‖z‖₁ ≤ ψ}`.
///
/// Returns `v` when it is already inside. Otherwise sorts `|v|` descending,
/// finds `m̄` with `s_{m̄-1} < ψ ≤ s_m̄` where `s_m = Σ_{k≤m} a_k - m·a_{m+1}`,
/// and soft-thresholds the top `m̄` entries by `(Σ_{k≤m̄} a_k - ψ)/m̄`.
pub fn project_l1_ball(v: &[f64], psi: f64) -> Result<Vec<f64>> {
    ProxKind::L1BallIndicator { psi }.validate()?;
    check_finite("v", v)?;
    Ok(l1_ball_projection(v, psi))
}

pub(crate) fn l1_ball_projection(v: &[f64], psi: f64) -> Vec<f64> {
    let d = v.len();
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= psi {
        return v.to_vec();
    }
    let mut order = magnitude_order(v);
    order.reverse();
    let a: Vec<f64> = order.iter().map(|&i| v[i].abs()).collect();

    let mut m_bar = d;
    let mut prefix = 0.0;
    for m in 1..d {
        prefix += a[m - 1];
        let s_m = prefix - m as f64 * a[m];
        if psi <= s_m {
            m_bar = m;
            break;
        }
    }
    let top: f64 = a[..m_bar].iter().sum();
    let theta = (top - psi) / m_bar as f64;

    let mut z = vec![0.0; d];
    for &i in &order[..m_bar] {
        z[i] = (v[i].abs() - theta).max(0.0).copysign(v[i]);
    }
    // Rounding in the threshold can leave ‖z‖₁ a few ulps above ψ.
    let zn: f64 = z.iter().map(|x| x.abs()).sum();
    if zn > psi {
        let c = psi / zn;
        z.iter_mut().for_each(|x| *x *= c);
    }
    z
}

/// Componentwise clamp to `[-R, R]`.
pub fn project_box(v: &[f64], radius: f64) -> Vec<f64> {
    v.iter().map(|x| x.clamp(-radius, radius)).collect()
}

/// Default tolerance for [`verify_phi_subgradient`] at a given `z`:
/// `1e-9 · max(1, ‖z‖₁)`.
pub fn default_subgradient_tol(z: &[f64]) -> f64 {
    1e-9 * z.iter().map(|x| x.abs()).sum::<f64>().max(1.0)
}

/// Checks `ξ ∈ ∂φ(z)` up to `tol`.
///
/// * Penalty: `‖ξ‖∞ ≤ ρ̂‖z‖₁ + tol` and `ξᵀz ≥ ρ̂‖z‖₁² - tol`, which together
///   characterize `ρ̂‖z‖₁ ∂‖z‖₁`.
/// * Ball: either `z` is strictly inside and `ξ ≈ 0`, or `z` is on the sphere
///   and `ξᵀz ≥ ‖ξ‖∞ψ - tol` (ξ is a normal vector).
/// * None: `ξ ≈ 0`.
pub fn verify_phi_subgradient(kind: ProxKind, z: &[f64], xi: &[f64], tol: f64) -> Result<bool> {
    check_len(z.len(), xi.len())?;
    kind.validate()?;
    let l1: f64 = z.iter().map(|x| x.abs()).sum();
    let linf = xi.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let inner: f64 = z.iter().zip(xi).map(|(a, b)| a * b).sum();
    Ok(match kind {
        ProxKind::L1SquaredPenalty { rho_hat } => linf <= rho_hat * l1 + tol && inner >= rho_hat * l1 * l1 - tol,
        ProxKind::L1BallIndicator { psi } => {
            let interior = l1 <= psi - tol && linf <= tol;
            let boundary = inner >= linf * psi - tol && (psi - tol..=psi + tol).contains(&l1);
            interior || boundary
        }
        ProxKind::EuclideanNone => linf <= tol,
    })
}

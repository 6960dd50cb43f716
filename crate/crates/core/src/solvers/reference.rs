//! Deterministic projected gradient with Armijo backtracking, used to compute
//! `f*` for reporting gaps.

use crate::error::{check_finite, check_len};
use crate::problem::StochasticProblem;
use crate::prox::project_box;
use crate::{DisfomError, Result};

const ARMIJO_C1: f64 = 0.25;
const BACKTRACK: f64 = 0.5;
const STEP_TOL: f64 = 1e-10;
const MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub f_star: f64,
    pub x_star: Vec<f64>,
    pub iterations: usize,
    /// `f` at every iterate, starting with `f(x⁰)`.
    pub values: Vec<f64>,
}

/// Iterates `x⁺ = P(x - α∇f(x))`, starting each backtracking search at
/// `α = 1` and halving until `f(x⁺) ≤ f(x) + ¼∇f(x)ᵀ(x⁺ - x)`. Stops once
/// `‖x⁺ - x‖₁ ≤ 1e-10`, or once the predicted decrease `¼∇f(x)ᵀ(x⁺ - x)`
/// drops below the rounding level of `f` without `f` moving, and returns the
/// last iterate.
pub fn projected_gradient_backtracking<P: StochasticProblem>(problem: &P, x0: &[f64]) -> Result<ReferenceSolution> {
    check_len(problem.dim(), x0.len())?;
    check_finite("x0", x0)?;
    let radius = problem.box_radius();
    let missing = || DisfomError::Config("reference solver needs closed-form value and gradient".into());
    let mut x = project_box(x0, radius);
    let mut f = problem.closed_form_value(&x).ok_or_else(missing)?;
    let mut values = vec![f];
    for it in 1..=MAX_ITER {
        let g = problem.closed_form_gradient(&x).ok_or_else(missing)?;
        let mut alpha = 1.0;
        let (x_new, f_new, decrease) = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
            let cand = project_box(&trial, radius);
            let decrease: f64 = g.iter().zip(cand.iter().zip(&x)).map(|(gi, (c, xi))| gi * (c - xi)).sum();
            let f_cand = problem.closed_form_value(&cand).ok_or_else(missing)?;
            if f_cand <= f + ARMIJO_C1 * decrease {
                break (cand, f_cand, decrease);
            }
            alpha *= BACKTRACK;
            if alpha < 1e-30 {
                return Err(DisfomError::NotConverged {
                    routine: "Armijo backtracking",
                    iterations: it,
                    primal: f_cand - f,
                    dual: decrease,
                });
            }
        };
        let step: f64 = x_new.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        // Once the predicted decrease is below the rounding level of f the
        // Armijo test accepts any step and the iterates can zig-zag forever.
        let stalled = f_new >= f && (ARMIJO_C1 * decrease).abs() <= f64::EPSILON * f.abs().max(1.0);
        x = x_new;
        f = f_new;
        values.push(f);
        if step <= STEP_TOL || stalled {
            return Ok(ReferenceSolution { f_star: f, x_star: x, iterations: it, values });
        }
    }
    Err(DisfomError::NotConverged {
        routine: "projected gradient reference solver",
        iterations: MAX_ITER,
        primal: f,
        dual: f64::NAN,
    })
}

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::truncnorm::{sample_truncated_normal, truncated_normal_variance};
use super::StochasticProblem;
use crate::error::{check_finite, check_len};
use crate::{DisfomError, Result};

const POWER_ITER_TOL: f64 = 1e-8;
const POWER_ITER_MAX: usize = 10_000;

/// Nonconvex stochastic least squares with a saturating regularizer:
///
/// `F(x, ζ) = ½(αᵀx - b)² + λ Σᵢ xᵢ²/(1 + xᵢ²)`, with `α = Σ^{1/2} s`,
/// `b = αᵀx_true + w`, and every `sᵢ` and `w` an independent standard normal
/// truncated to `[-u, u]`.
///
/// `Σ` is the identity except for its leading `d/16 × d/16` block, which is a
/// random SPD matrix with spectrum in `[1, 2]`. Only that block (and its
/// symmetric square root) is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticQP {
    dim: usize,
    block: usize,
    factor_block: DMatrix<f64>,
    sigma_block: DMatrix<f64>,
    x_true: Vec<f64>,
    lambda_reg: f64,
    truncation: f64,
    trunc_var: f64,
    box_radius: f64,
    lipschitz: f64,
}

/// One draw of `(s, w)` together with the derived `α` and `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    s: Vec<f64>,
    w: f64,
    alpha: Vec<f64>,
    target: f64,
}

impl Sample {
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// `α = Σ^{1/2} s`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `b = αᵀx_true + w`.
    pub fn target(&self) -> f64 {
        self.target
    }
}

impl SyntheticQP {
    /// Builds an instance from `seed`.
    ///
    /// The leading block is `Q D Qᵀ` where `D` has i.i.d. `Uniform(1, 2)`
    /// diagonal entries and `Q` is the orthonormal factor of a QR
    /// decomposition of a matrix with i.i.d. `Uniform(0, 1)` entries, with
    /// signs chosen so that `R` has a nonnegative diagonal.
    pub fn generate(dim: usize, seed: u64, box_radius: f64, truncation: f64, lambda_reg: f64) -> Result<Self> {
        if dim < 16 || !dim.is_multiple_of(16) {
            return Err(DisfomError::InvalidArgument(format!(
                "dimension must be a positive multiple of 16, got {dim}"
            )));
        }
        for (name, v) in [("box radius", box_radius), ("regularizer weight", lambda_reg)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DisfomError::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        let trunc_var = truncated_normal_variance(truncation)?;
        let block = dim / 16;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let diag: Vec<f64> = (0..block).map(|_| rng.random_range(1.0..2.0)).collect();
        let raw = DMatrix::<f64>::from_fn(block, block, |_, _| rng.random::<f64>());

        let qr = raw.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..block {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }

        let sqrt_d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(block, diag.iter().map(|v| v.sqrt())));
        let factor_block = symmetrize(&q * sqrt_d * q.transpose());
        Self::assemble(dim, factor_block, box_radius, truncation, trunc_var, lambda_reg, None)
    }

    /// Completes an instance from the factor block. When `lipschitz` is
    /// `None` it is computed by power iteration.
    pub(super) fn assemble(
        dim: usize,
        factor_block: DMatrix<f64>,
        box_radius: f64,
        truncation: f64,
        trunc_var: f64,
        lambda_reg: f64,
        lipschitz: Option<f64>,
    ) -> Result<Self> {
        let block = dim / 16;
        let sigma_block = symmetrize(&factor_block * &factor_block);
        let mut x_true = vec![0.0; dim];
        x_true[..block].fill(1.0);
        let mut qp = SyntheticQP {
            dim,
            block,
            factor_block,
            sigma_block,
            x_true,
            lambda_reg,
            truncation,
            trunc_var,
            box_radius,
            lipschitz: 0.0,
        };
        qp.lipschitz = match lipschitz {
            Some(l) => l,
            None => trunc_var * qp.sigma_max_eigenvalue().unwrap_or(2.0) + 2.0 * lambda_reg,
        };
        Ok(qp)
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    /// The symmetric square root of the leading block of `Σ`.
    pub fn factor_block(&self) -> &DMatrix<f64> {
        &self.factor_block
    }

    /// The leading `d/16 × d/16` block of `Σ`.
    pub fn sigma_block(&self) -> &DMatrix<f64> {
        &self.sigma_block
    }

    /// The full `d × d` factor `Σ^{1/2}`.
    pub fn sigma_factor(&self) -> DMatrix<f64> {
        self.embed(&self.factor_block)
    }

    /// The full `d × d` covariance scale `Σ`.
    pub fn sigma(&self) -> DMatrix<f64> {
        self.embed(&self.sigma_block)
    }

    fn embed(&self, blk: &DMatrix<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.dim, self.dim);
        m.view_mut((0, 0), (self.block, self.block)).copy_from(blk);
        m
    }

    pub fn x_true(&self) -> &[f64] {
        &self.x_true
    }

    pub fn lambda_reg(&self) -> f64 {
        self.lambda_reg
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// `σ²`, the common variance of the truncated normals.
    pub fn trunc_var(&self) -> f64 {
        self.trunc_var
    }

    /// Largest eigenvalue of `Σ` by power iteration from the all-ones vector.
    /// `None` if the Rayleigh quotient has not settled to relative tolerance
    /// `1e-8` within `10⁴` iterations.
    pub fn sigma_max_eigenvalue(&self) -> Option<f64> {
        let mut v = vec![1.0 / (self.dim as f64).sqrt(); self.dim];
        let mut prev = f64::NAN;
        for _ in 0..POWER_ITER_MAX {
            let w = self.apply_sigma(&v);
            let rq: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            v = w.into_iter().map(|a| a / norm).collect();
            if (rq - prev).abs() <= POWER_ITER_TOL * rq.abs() {
                return Some(rq);
            }
            prev = rq;
        }
        None
    }

    /// `Σ y`.
    pub fn apply_sigma(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        block_matvec(&self.sigma_block, &y[..self.block], &mut out[..self.block]);
        out
    }

    /// `Σ^{1/2} s`.
    pub fn apply_factor(&self, s: &[f64]) -> Vec<f64> {
        let mut out = s.to_vec();
        block_matvec(&self.factor_block, &s[..self.block], &mut out[..self.block]);
        out
    }

    /// Builds a sample from explicit `(s, w)`.
    pub fn sample_from_parts(&self, s: Vec<f64>, w: f64) -> Result<Sample> {
        check_len(self.dim, s.len())?;
        let u = self.truncation;
        if s.iter().any(|v| !(v.abs() <= u)) || !(w.abs() <= u) {
            return Err(DisfomError::InvalidArgument(format!("sample components must lie in [-{u}, {u}]")));
        }
        Ok(self.realize(s, w))
    }

    fn realize(&self, s: Vec<f64>, w: f64) -> Sample {
        let alpha = self.apply_factor(&s);
        let target = alpha[..self.block].iter().sum::<f64>() + w;
        Sample { s, w, alpha, target }
    }

    /// `∇F(x, ζ) = α(αᵀx - b) + λ (2xᵢ/(1 + xᵢ²)²)ᵢ`.
    pub fn stochastic_gradient(&self, x: &[f64], sample: &Sample) -> Result<Vec<f64>> {
        check_len(self.dim, x.len())?;
        check_len(self.dim, sample.s.len())?;
        check_finite("x", x)?;
        let mut out = vec![0.0; self.dim];
        self.sample_gradient_into(x, sample, &mut out);
        Ok(out)
    }

    /// `F(x, ζ)`, used by Monte-Carlo checks of the closed form.
    pub fn sample_value(&self, x: &[f64], sample: &Sample) -> Result<f64> {
        check_len(self.dim, x.len())?;
        let r = dot(&sample.alpha, x) - sample.target;
        Ok(0.5 * r * r + self.regularizer(x))
    }

    fn regularizer(&self, x: &[f64]) -> f64 {
        self.lambda_reg * x.iter().map(|v| v * v / (1.0 + v * v)).sum::<f64>()
    }

    /// `f(x) = (σ²/2)(x - x_true)ᵀΣ(x - x_true) + λ Σᵢ xᵢ²/(1 + xᵢ²) + σ²/2`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim, x.len())?;
        let y: Vec<f64> = x.iter().zip(&self.x_true).map(|(a, b)| a - b).collect();
        let quad = dot(&y, &self.apply_sigma(&y));
        Ok(0.5 * self.trunc_var * quad + self.regularizer(x) + 0.5 * self.trunc_var)
    }

    /// `∇f(x) = σ²Σ(x - x_true) + λ (2xᵢ/(1 + xᵢ²)²)ᵢ`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, x.len())?;
        let y: Vec<f64> = x.iter().zip(&self.x_true).map(|(a, b)| a - b).collect();
        let mut g = self.apply_sigma(&y);
        for (gi, &xi) in g.iter_mut().zip(x) {
            *gi = self.trunc_var * *gi + self.reg_grad(xi);
        }
        Ok(g)
    }

    #[inline]
    fn reg_grad(&self, xi: f64) -> f64 {
        let t = 1.0 + xi * xi;
        self.lambda_reg * 2.0 * xi / (t * t)
    }

    /// An upper bound on the sub-Gaussian parameter `σ∞²` of every component
    /// of `∇F(x, ζ) - ∇f(x)`.
    ///
    /// `|αᵢ| ≤ u‖Σ^{1/2}ᵢ‖₁` and `|αᵀ(x - x_true) - w| ≤ u(‖Σ^{1/2}(x - x_true)‖₁ + 1)`,
    /// so each component has support of half-width `Bᵢ` and, by Hoeffding's
    /// lemma, is `Bᵢ²`-sub-Gaussian.
    pub fn subgaussian_bound(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim, x.len())?;
        let u = self.truncation;
        let y: Vec<f64> = x.iter().zip(&self.x_true).map(|(a, b)| a - b).collect();
        let fy = self.apply_factor(&y);
        let resid = u * (fy.iter().map(|v| v.abs()).sum::<f64>() + 1.0);
        let max_row =
            self.factor_block.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(1.0_f64, f64::max);
        let b = u * max_row * resid;
        Ok(b * b)
    }
}

impl StochasticProblem for SyntheticQP {
    type Sample = Sample;

    fn dim(&self) -> usize {
        self.dim
    }

    fn box_radius(&self) -> f64 {
        self.box_radius
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Both terms of `f - σ²/2` are nonnegative.
    fn lower_bound(&self) -> f64 {
        0.5 * self.trunc_var
    }

    fn draw_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let u = self.truncation;
        let s: Vec<f64> = (0..self.dim).map(|_| sample_truncated_normal(u, rng)).collect();
        let w = sample_truncated_normal(u, rng);
        self.realize(s, w)
    }

    fn sample_gradient_into(&self, x: &[f64], sample: &Sample, out: &mut [f64]) {
        let r = dot(&sample.alpha, x) - sample.target;
        for ((o, &a), &xi) in out.iter_mut().zip(&sample.alpha).zip(x) {
            *o = a * r + self.reg_grad(xi);
        }
    }

    fn closed_form_value(&self, x: &[f64]) -> Option<f64> {
        self.value(x).ok()
    }

    fn closed_form_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient(x).ok()
    }

    /// `λ/2 - λ_min(σ²Σ)`, with `λ_min(σ²Σ) = σ²` because the trailing
    /// identity block carries the smallest eigenvalue.
    fn weak_convexity_modulus(&self) -> Option<f64> {
        Some(0.5 * self.lambda_reg - self.trunc_var)
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `out = blk · v` for a column-major square block.
fn block_matvec(blk: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    let n = blk.nrows();
    out.fill(0.0);
    for (col, &vj) in blk.as_slice().chunks_exact(n).zip(v) {
        for (o, &c) in out[..n].iter_mut().zip(col) {
            *o += c * vj;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

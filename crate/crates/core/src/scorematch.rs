//! Weighted score-matching objective for the generalized Hüsler–Reiss
//! density, its per-sample closed form and its exact gradient.
//!
//! For a sample `x` with `ℓ = log x` and residual `r = μ − 𝟏 − Θℓ`, the
//! per-sample objective is
//!
//! ```text
//! o(μ, Θ, x) = ‖r ⊗ f1‖² + rᵀ f2 − Σ_j Θ_jj F_jj
//! ```
//!
//! with `f1_j = w(x_j)`, `f2_j = 2w(x_j)² + 4x_j w′(x_j) w(x_j)` and
//! `F_jj = 2w(x_j)²`. The objective is a convex quadratic in `(μ, Θ)`; terms
//! that depend only on the data density are dropped.
//!
//! `Θ` is taken as a plain matrix here so that derivatives can be formed in
//! every direction; [`crate::model::ThetaMatrix`] derefs to one via
//! `entries()`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar weight `w` with its derivative `w′`.
#[derive(Clone)]
pub struct WeightFunction {
    name: String,
    eval: ScalarFn,
    deriv: ScalarFn,
}

impl WeightFunction {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        WeightFunction {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
        }
    }

    /// `w(x) = log x`, the default.
    pub fn log() -> Self {
        Self::new("log", f64::ln, |x| 1.0 / x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }
}

impl Default for WeightFunction {
    fn default() -> Self {
        Self::log()
    }
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction").field("name", &self.name).finish()
    }
}

/// Per-sample data functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    pub logx: DVector<f64>,
    pub f1: DVector<f64>,
    pub f2: DVector<f64>,
    /// Diagonal of `F`.
    pub fdiag: DVector<f64>,
}

impl SampleStats {
    pub fn dim(&self) -> usize {
        self.logx.len()
    }
}

/// Gradient of the summed objective with respect to `(μ, Θ)`; `d_theta` is
/// the symmetric part of the free-matrix gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub d_mu: DVector<f64>,
    pub d_theta: DMatrix<f64>,
}

impl Gradient {
    /// Inner product with a displacement `(Δμ, ΔΘ)`.
    pub fn dot(&self, d_mu: &DVector<f64>, d_theta: &DMatrix<f64>) -> f64 {
        self.d_mu.dot(d_mu) + self.d_theta.dot(d_theta)
    }
}

fn check_point(x: &[f64]) -> Result<()> {
    for (index, &value) in x.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveCoordinate { index, value });
        }
    }
    Ok(())
}

pub fn sample_stats(x: &[f64], w: &WeightFunction) -> Result<SampleStats> {
    check_point(x)?;
    let d = x.len();
    let mut logx = DVector::zeros(d);
    let mut f1 = DVector::zeros(d);
    let mut f2 = DVector::zeros(d);
    let mut fdiag = DVector::zeros(d);
    for (j, &xj) in x.iter().enumerate() {
        let wj = w.eval(xj);
        logx[j] = xj.ln();
        f1[j] = wj;
        f2[j] = 2.0 * wj * wj + 4.0 * xj * w.deriv(xj) * wj;
        fdiag[j] = 2.0 * wj * wj;
    }
    Ok(SampleStats { logx, f1, f2, fdiag })
}

/// Score of the generalized density: `s_j = (μ_j − 1 − (Θ log x)_j) / x_j`.
pub fn model_score(x: &[f64], mu: &DVector<f64>, theta: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_dims(mu, theta, x.len())?;
    check_point(x)?;
    let logx = DVector::from_iterator(x.len(), x.iter().map(|v| v.ln()));
    let tl = theta * logx;
    Ok(DVector::from_fn(x.len(), |j, _| (mu[j] - 1.0 - tl[j]) / x[j]))
}

fn check_dims(mu: &DVector<f64>, theta: &DMatrix<f64>, d: usize) -> Result<()> {
    if mu.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: mu.len() });
    }
    if theta.nrows() != d || theta.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: theta.nrows() });
    }
    Ok(())
}

#[inline]
fn residual(mu: &DVector<f64>, theta: &DMatrix<f64>, stats: &SampleStats) -> DVector<f64> {
    let mut r = theta * &stats.logx;
    for j in 0..r.len() {
        r[j] = mu[j] - 1.0 - r[j];
    }
    r
}

/// Per-sample objective `o(μ, Θ, x)`.
pub fn objective_o(mu: &DVector<f64>, theta: &DMatrix<f64>, stats: &SampleStats) -> f64 {
    let r = residual(mu, theta, stats);
    let mut value = 0.0;
    for j in 0..r.len() {
        let rf = r[j] * stats.f1[j];
        value += rf * rf + r[j] * stats.f2[j] - theta[(j, j)] * stats.fdiag[j];
    }
    value
}

fn check_batch(mu: &DVector<f64>, theta: &DMatrix<f64>, batch: &[SampleStats]) -> Result<()> {
    let first = batch.first().ok_or(Error::EmptyBatch)?;
    let d = first.dim();
    check_dims(mu, theta, d)?;
    if let Some(bad) = batch.iter().find(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: bad.dim() });
    }
    Ok(())
}

/// Sum of [`objective_o`] over the batch (fixed-tree reduction).
pub fn objective_sum(mu: &DVector<f64>, theta: &DMatrix<f64>, batch: &[SampleStats]) -> Result<f64> {
    check_batch(mu, theta, batch)?;
    Ok(par::chunked_sum(batch, |s| objective_o(mu, theta, s)))
}

fn raw_gradient_into(
    mu: &DVector<f64>,
    theta: &DMatrix<f64>,
    stats: &SampleStats,
    d_mu: &mut DVector<f64>,
    d_theta: &mut DMatrix<f64>,
) {
    let d = mu.len();
    let r = residual(mu, theta, stats);
    for j in 0..d {
        let f1sq = stats.f1[j] * stats.f1[j];
        let a = 2.0 * r[j] * f1sq + stats.f2[j];
        d_mu[j] += a;
        // ∂/∂Θ_jk = −(2 r_j f1_j² + f2_j) ℓ_k − F_jj 𝟙{j=k}
        for k in 0..d {
            d_theta[(j, k)] -= a * stats.logx[k];
        }
        d_theta[(j, j)] -= stats.fdiag[j];
    }
}

/// Exact gradient of [`objective_sum`].
pub fn gradient(mu: &DVector<f64>, theta: &DMatrix<f64>, batch: &[SampleStats]) -> Result<Gradient> {
    check_batch(mu, theta, batch)?;
    let d = mu.len();
    let partials = par::map_chunks(batch, par::CHUNK, |chunk| {
        let mut d_mu = DVector::zeros(d);
        let mut d_theta = DMatrix::zeros(d, d);
        for s in chunk {
            raw_gradient_into(mu, theta, s, &mut d_mu, &mut d_theta);
        }
        (d_mu, d_theta)
    });
    let mut d_mu = DVector::zeros(d);
    let mut d_theta = DMatrix::zeros(d, d);
    for (gm, gt) in partials {
        d_mu += gm;
        d_theta += gt;
    }
    let d_theta = (&d_theta + d_theta.transpose()) * 0.5;
    Ok(Gradient { d_mu, d_theta })
}

/// Residual of the exact quadratic expansion of the summed objective
/// between `(μ, Θ)` and `(μ′, Θ′)`. Zero up to rounding for symmetric `Θ`s.
pub fn curvature_residual(
    mu: &DVector<f64>,
    theta: &DMatrix<f64>,
    mu2: &DVector<f64>,
    theta2: &DMatrix<f64>,
    batch: &[SampleStats],
) -> Result<f64> {
    check_batch(mu2, theta2, batch)?;
    let base = objective_sum(mu, theta, batch)?;
    let moved = objective_sum(mu2, theta2, batch)?;
    let grad = gradient(mu, theta, batch)?;
    let d_mu = mu2 - mu;
    let d_theta = theta2 - theta;
    let quad = par::chunked_sum(batch, |s| {
        let shift = &d_theta * &s.logx;
        (0..d_mu.len())
            .map(|j| {
                let v = (d_mu[j] - shift[j]) * s.f1[j];
                v * v
            })
            .sum::<f64>()
    });
    Ok((moved - base - grad.dot(&d_mu, &d_theta) - quad).abs())
}

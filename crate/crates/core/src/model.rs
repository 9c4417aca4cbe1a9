//! Parameter representations of the Hüsler–Reiss model and the exact maps
//! between them.
//!
//! A model is classically given by a variogram `Γ`. Fixing an anchor
//! coordinate `m` turns `Γ` into a covariance `Σ[m]` of the log-ratios
//! `log(x_{-m} / x_m)`. The disentangled parametrization replaces `Σ[m]` by a
//! location `μ` and an interaction matrix `Θ` (symmetric, zero row sums),
//! which is in turn freely parametrized by its strictly upper triangle `Λ`.
//!
//! Anchor indices are 0-based throughout the library. The CLI converts from
//! the 1-based convention at its boundary.
//!
//! All densities are unnormalized log-densities.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, CONDITION_LIMIT};

const SYMMETRY_TOL: f64 = 1e-12;
const CND_TOL: f64 = 1e-10;
/// Row-sum tolerance (relative to `max(1, ‖Θ‖∞)`) accepted for `Θ`.
pub const ROW_SUM_TOL: f64 = 1e-8;

fn scale_of(m: &DMatrix<f64>) -> f64 {
    linalg::max_abs(m).max(1.0)
}

fn check_anchor(m: usize, d: usize) -> Result<()> {
    if m >= d {
        return Err(Error::AnchorOutOfRange { m, d });
    }
    Ok(())
}

fn check_point(x: &[f64]) -> Result<()> {
    for (index, &value) in x.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveCoordinate { index, value });
        }
    }
    Ok(())
}

/// Maps a reduced index `a ∈ 0..d-1` to the original coordinate skipping `m`.
#[inline]
fn expand(a: usize, m: usize) -> usize {
    if a < m {
        a
    } else {
        a + 1
    }
}

/// Maps an original coordinate `j ≠ m` to its reduced index.
#[inline]
fn reduce(j: usize, m: usize) -> usize {
    debug_assert_ne!(j, m);
    if j < m {
        j
    } else {
        j - 1
    }
}

/// Symmetric, zero-diagonal, conditionally negative-definite matrix `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Variogram(DMatrix<f64>);

impl Variogram {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let d = entries.nrows();
        if d < 2 {
            return Err(Error::InvalidVariogram(format!("dimension {d} < 2")));
        }
        if entries.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: entries.ncols(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidVariogram("non-finite entry".into()));
        }
        let scale = scale_of(&entries);
        for j in 0..d {
            if entries[(j, j)].abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidVariogram(format!(
                    "diagonal entry ({j}, {j}) = {} is not zero",
                    entries[(j, j)]
                )));
            }
            for k in (j + 1)..d {
                if (entries[(j, k)] - entries[(k, j)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidVariogram(format!(
                        "not symmetric at ({j}, {k})"
                    )));
                }
            }
        }
        let basis = linalg::zero_sum_basis(d);
        let projected = basis.transpose() * &entries * &basis;
        let projected = (&projected + projected.transpose()) * 0.5;
        let top = *linalg::sym_eigenvalues(&projected).last().unwrap();
        if !(top < -CND_TOL * linalg::max_abs(&entries)) {
            return Err(Error::InvalidVariogram(format!(
                "not conditionally negative definite (largest projected eigenvalue {top:e})"
            )));
        }
        Ok(Variogram(entries))
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(d, d, f))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Covariance `Σ[m]` of the log-ratios with respect to anchor `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceAt {
    m: usize,
    entries: DMatrix<f64>,
}

impl CovarianceAt {
    /// `entries` is `(d-1)×(d-1)`; `m` is the anchor in `0..d`.
    pub fn new(m: usize, entries: DMatrix<f64>) -> Result<Self> {
        let k = entries.nrows();
        if entries.ncols() != k || k == 0 {
            return Err(Error::InvalidCovariance("must be square and non-empty".into()));
        }
        check_anchor(m, k + 1)?;
        let scale = scale_of(&entries);
        for a in 0..k {
            for b in (a + 1)..k {
                if (entries[(a, b)] - entries[(b, a)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidCovariance(format!("not symmetric at ({a}, {b})")));
                }
            }
        }
        if entries.clone().cholesky().is_none() {
            return Err(Error::InvalidCovariance("not positive definite".into()));
        }
        Ok(CovarianceAt { m, entries })
    }

    pub fn anchor(&self) -> usize {
        self.m
    }

    /// Dimension `d` of the model (one more than the matrix size).
    pub fn model_dim(&self) -> usize {
        self.entries.nrows() + 1
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Location vector `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Location(DVector<f64>);

impl Location {
    pub fn new(entries: DVector<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("location has non-finite entries".into()));
        }
        Ok(Location(entries))
    }

    pub fn zeros(d: usize) -> Self {
        Location(DVector::zeros(d))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Strictly upper-triangular `Λ`; the free parametrization of `Θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaUpper(DMatrix<f64>);

impl LambdaUpper {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let d = entries.nrows();
        if entries.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: entries.ncols(),
            });
        }
        for j in 0..d {
            for k in 0..=j {
                let value = entries[(j, k)];
                if value != 0.0 {
                    return Err(Error::NotStrictlyUpper { row: j, col: k, value });
                }
            }
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("lambda has non-finite entries".into()));
        }
        Ok(LambdaUpper(entries))
    }

    pub fn zeros(d: usize) -> Self {
        LambdaUpper(DMatrix::zeros(d, d))
    }

    /// Builds `Λ` from `f(j, k)` evaluated on `j < k` only.
    pub fn from_upper_fn(d: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(d, d, |j, k| if j < k { f(j, k) } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.0[(j, k)]
    }

    /// Entries `(j, k, value)` with `j < k` and `value != 0`, row-major.
    pub fn nonzeros(&self) -> Vec<(usize, usize, f64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for j in 0..d {
            for k in (j + 1)..d {
                let v = self.0[(j, k)];
                if v != 0.0 {
                    out.push((j, k, v));
                }
            }
        }
        out
    }

    pub(crate) fn set(&mut self, j: usize, k: usize, value: f64) {
        debug_assert!(j < k);
        self.0[(j, k)] = value;
    }
}

/// Symmetric interaction matrix `Θ` with zero row and column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMatrix(DMatrix<f64>);

impl ThetaMatrix {
    /// Validates symmetry and zero row sums to `ROW_SUM_TOL` (scale-relative).
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let d = entries.nrows();
        if entries.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: entries.ncols(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("theta has non-finite entries".into()));
        }
        let scale = scale_of(&entries);
        let mut violation = 0.0_f64;
        for j in 0..d {
            violation = violation.max(entries.row(j).sum().abs());
            for k in (j + 1)..d {
                violation = violation.max((entries[(j, k)] - entries[(k, j)]).abs());
            }
        }
        if violation > ROW_SUM_TOL * scale {
            return Err(Error::NotZeroRowSum { violation });
        }
        Ok(ThetaMatrix(entries))
    }

    pub fn zeros(d: usize) -> Self {
        ThetaMatrix(DMatrix::zeros(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Largest absolute row sum.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim()).fold(0.0_f64, |acc, j| acc.max(self.0.row(j).sum().abs()))
    }
}

/// `Σ[m]` from `Γ` by the four-case formula; `m` is 0-based.
pub fn gamma_to_sigma(gamma: &Variogram, m: usize) -> Result<CovarianceAt> {
    let d = gamma.dim();
    check_anchor(m, d)?;
    let g = gamma.entries();
    let sigma = DMatrix::from_fn(d - 1, d - 1, |a, b| {
        let (k, l) = (expand(a, m), expand(b, m));
        (g[(k, m)] + g[(m, l)] - g[(k, l)]) / 2.0
    });
    CovarianceAt::new(m, sigma).map_err(|e| match e {
        Error::InvalidCovariance(msg) => {
            Error::InvalidVariogram(format!("covariance at anchor {m}: {msg}"))
        }
        other => other,
    })
}

/// Inverse of [`gamma_to_sigma`].
///
/// `Γ_{a m} = Σ_{aa}` and `Γ_{ab} = Σ_{aa} + Σ_{bb} − 2Σ_{ab}` for non-anchor
/// coordinates `a, b` (reduced indices shifted across `m`).
pub fn sigma_to_gamma(sigma: &CovarianceAt) -> Result<Variogram> {
    let m = sigma.anchor();
    let d = sigma.model_dim();
    let s = sigma.entries();
    let gamma = DMatrix::from_fn(d, d, |j, k| {
        if j == k {
            0.0
        } else if j == m {
            s[(reduce(k, m), reduce(k, m))]
        } else if k == m {
            s[(reduce(j, m), reduce(j, m))]
        } else {
            let (a, b) = (reduce(j, m), reduce(k, m));
            s[(a, a)] + s[(b, b)] - 2.0 * s[(a, b)]
        }
    });
    Variogram::new(gamma)
}

/// Location and free interaction parameters equivalent to `Γ` at anchor `m`.
pub fn hr_to_mu_lambda(gamma: &Variogram, m: usize) -> Result<(Location, LambdaUpper)> {
    let d = gamma.dim();
    let sigma = gamma_to_sigma(gamma, m)?;
    let precision = linalg::spd_inverse(sigma.entries(), CONDITION_LIMIT)
        .map_err(|condition| Error::Singular { m, condition })?;

    let g = gamma.entries();
    let gamma_anchor = DVector::from_fn(d - 1, |a, _| g[(expand(a, m), m)]);
    let z = &precision * gamma_anchor;

    let mut mu = DVector::zeros(d);
    for j in 0..d {
        mu[j] = if j == m {
            z.sum() / 2.0 - 1.0
        } else {
            -z[reduce(j, m)] / 2.0
        };
    }

    let mut lambda = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in (j + 1)..d {
            lambda[(j, k)] = if j == m {
                -precision.column(reduce(k, m)).sum()
            } else if k == m {
                -precision.row(reduce(j, m)).sum()
            } else {
                precision[(reduce(j, m), reduce(k, m))]
            };
        }
    }
    Ok((Location::new(mu)?, LambdaUpper(lambda)))
}

/// `Θ = Λ + Λᵀ − diag(Λ𝟏 + Λᵀ𝟏)`.
pub fn lambda_to_theta(lambda: &LambdaUpper) -> ThetaMatrix {
    let l = lambda.entries();
    let d = lambda.dim();
    let mut theta = l + l.transpose();
    for j in 0..d {
        // Sum off-diagonal entries in a fixed order so that the row sum is
        // as close to exact as floating point allows.
        let mut acc = 0.0;
        for k in 0..d {
            if k != j {
                acc += theta[(j, k)];
            }
        }
        theta[(j, j)] = -acc;
    }
    ThetaMatrix(theta)
}

/// Strict upper triangle of a validated `Θ`.
pub fn theta_to_lambda(theta: &ThetaMatrix) -> LambdaUpper {
    let t = theta.entries();
    let d = theta.dim();
    LambdaUpper(DMatrix::from_fn(d, d, |j, k| if j < k { t[(j, k)] } else { 0.0 }))
}

/// Variogram implied by `Θ` through `Σ[m] = (Θ_{−m,−m})⁻¹`.
pub fn theta_to_gamma(theta: &ThetaMatrix, m: usize) -> Result<Variogram> {
    let d = theta.dim();
    check_anchor(m, d)?;
    let block = linalg::drop_row_col(theta.entries(), m);
    let sigma = linalg::spd_inverse(&block, CONDITION_LIMIT)
        .map_err(|condition| Error::Singular { m, condition })?;
    sigma_to_gamma(&CovarianceAt::new(m, sigma)?)
}

/// Unnormalized generalized log-density
/// `−Σ log x_j + μᵀ log x − ½ log xᵀ Θ log x`.
pub fn log_density_generalized(x: &[f64], mu: &Location, theta: &ThetaMatrix) -> Result<f64> {
    let d = theta.dim();
    if x.len() != d || mu.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if x.len() != d { x.len() } else { mu.dim() },
        });
    }
    check_point(x)?;
    let logx = DVector::from_iterator(d, x.iter().map(|v| v.ln()));
    let quad = logx.dot(&(theta.entries() * &logx));
    Ok(-logx.sum() + mu.as_vector().dot(&logx) - 0.5 * quad)
}

/// Unnormalized classical log-density at anchor `m` (Gaussian factor kept).
pub fn log_density_classical(x: &[f64], gamma: &Variogram, m: usize) -> Result<f64> {
    let d = gamma.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    check_point(x)?;
    let sigma = gamma_to_sigma(gamma, m)?;
    let chol = sigma
        .entries()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidVariogram("covariance not positive definite".into()))?;
    let g = gamma.entries();
    let log_xm = x[m].ln();
    let resid = DVector::from_fn(d - 1, |a, _| {
        let j = expand(a, m);
        (x[j].ln() - log_xm) + g[(j, m)] / 2.0
    });
    let solved = chol.solve(&resid);
    let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let k = (d - 1) as f64;
    let log_normal = -0.5 * k * (2.0 * PI).ln() - 0.5 * log_det - 0.5 * resid.dot(&solved);
    let log_sum: f64 = x.iter().map(|v| v.ln()).sum();
    Ok(-log_xm - log_sum + log_normal)
}

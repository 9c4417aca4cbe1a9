#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use hr_score::model::{lambda_to_theta, LambdaUpper, Variogram};
use hr_score::scorematch::{sample_stats, SampleStats, WeightFunction};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Squared Euclidean distances between `d` Gaussian points in `ℝ^d`, scaled
/// to a typical entry near `scale`. Affinely independent points a.s., so the
/// result is strictly conditionally negative definite.
pub fn random_variogram(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> Variogram {
    let pts: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| normal(rng)).collect()).collect();
    let raw = DMatrix::from_fn(d, d, |i, j| {
        pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    });
    let mean = raw.sum() / (d * d - d).max(1) as f64;
    Variogram::new(raw * (scale / mean)).expect("distance matrices are valid variograms")
}

/// Covariance at anchor `m`, computed entry by entry.
pub fn sigma_oracle(gamma: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..gamma.nrows()).filter(|&i| i != m).collect();
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| {
        let (i, j) = (idx[a], idx[b]);
        0.5 * (gamma[(i, m)] + gamma[(j, m)] - gamma[(i, j)])
    })
}

pub fn random_lambda(d: usize, rng: &mut ChaCha8Rng) -> LambdaUpper {
    let vals: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    LambdaUpper::from_upper_fn(d, |j, k| vals[j * d + k]).unwrap()
}

pub fn random_theta(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    lambda_to_theta(&random_lambda(d, rng)).into_inner()
}

/// Symmetric (not necessarily zero-row-sum) perturbation.
pub fn random_symmetric(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

pub fn random_vector(d: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))
}

/// Points with log-normal coordinates and sup-norm above 1.
pub fn random_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut x: Vec<f64> = (0..d).map(|_| normal(rng).exp()).collect();
            let mx = x.iter().cloned().fold(0.0, f64::max);
            if mx <= 1.0 {
                let k = rng.random_range(0..d);
                x[k] = 1.0 + rng.random::<f64>();
            }
            x
        })
        .collect()
}

pub fn batch_of(points: &[Vec<f64>], w: &WeightFunction) -> Vec<SampleStats> {
    points.iter().map(|x| sample_stats(x, w).unwrap()).collect()
}

pub fn to_matrix(points: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), points[0].len(), |i, j| points[i][j])
}

/// `[[1, 2, 2, …, 2, 1]]` on the diagonal, `−1` beside it, times `√d`.
pub fn tridiagonal_oracle(d: usize) -> DMatrix<f64> {
    let s = (d as f64).sqrt();
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            if i == 0 || i == d - 1 {
                s
            } else {
                2.0 * s
            }
        } else if i.abs_diff(j) == 1 {
            -s
        } else {
            0.0
        }
    })
}

/// Per-sample objective written out directly for the log weight:
/// `f1 = ℓ`, `f2 = 2ℓ² + 4ℓ`, `F = 2ℓ²`.
pub fn objective_log_weight(mu: &DVector<f64>, theta: &DMatrix<f64>, x: &[f64]) -> f64 {
    let d = x.len();
    let l: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let mut total = 0.0;
    for j in 0..d {
        let tl: f64 = (0..d).map(|k| theta[(j, k)] * l[k]).sum();
        let r = mu[j] - 1.0 - tl;
        total += r * r * l[j] * l[j] + r * (2.0 * l[j] * l[j] + 4.0 * l[j]) - theta[(j, j)] * 2.0 * l[j] * l[j];
    }
    total
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

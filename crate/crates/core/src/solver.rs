//! Coordinate-descent minimization of the empirical score-matching
//! objective, optionally with an ℓ1 penalty `√n·r·Σ_{j<k} |Λ_jk|`.
//!
//! All data enter through [`SufficientStats`], so a sweep costs `O(d³)`
//! independently of the sample size. Writing `Θ_j·` for row `j` of `Θ`, the
//! summed objective is
//!
//! ```text
//! Σ_j (μ_j−1)² c_j − 2(μ_j−1) Θ_j·ᵀ b_j + Θ_j·ᵀ G_j Θ_j· + (μ_j−1) s2_j − Θ_j·ᵀ t_j − Θ_jj u_j
//! ```

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lambda_to_theta, LambdaUpper, Location, ThetaMatrix};
use crate::par;
use crate::scorematch::{sample_stats, WeightFunction};

/// Tuning-parameter multipliers of the default path, in units of `√(log d / n)`.
pub const DEFAULT_MULTIPLIERS: [f64; 7] = [1000.0, 100.0, 10.0, 1.0, 0.1, 0.01, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Relative decrease of the penalized objective over one sweep below
    /// which the fit stops.
    pub tol: f64,
    pub max_sweeps: usize,
    pub penalize_mu: bool,
    pub penalize_diag: bool,
    /// `None` sweeps `Λ` in lexicographic order; `Some(seed)` shuffles the
    /// order every sweep with a seeded generator.
    pub seed: Option<u64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tol: 1e-8,
            max_sweeps: 10_000,
            penalize_mu: false,
            penalize_diag: false,
            seed: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Data aggregates of a batch.
///
/// Row `j` of `b` and `t` holds `b_j` and `t_j`; `g[j]` is `G_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub n: usize,
    pub d: usize,
    pub c: DVector<f64>,
    pub b: DMatrix<f64>,
    pub g: Vec<DMatrix<f64>>,
    pub s2: DVector<f64>,
    pub t: DMatrix<f64>,
    pub u: DVector<f64>,
}

impl SufficientStats {
    fn zeros(d: usize) -> Self {
        SufficientStats {
            n: 0,
            d,
            c: DVector::zeros(d),
            b: DMatrix::zeros(d, d),
            g: vec![DMatrix::zeros(d, d); d],
            s2: DVector::zeros(d),
            t: DMatrix::zeros(d, d),
            u: DVector::zeros(d),
        }
    }

    fn merge(&mut self, other: &SufficientStats) {
        self.n += other.n;
        self.c += &other.c;
        self.b += &other.b;
        for (g, og) in self.g.iter_mut().zip(&other.g) {
            *g += og;
        }
        self.s2 += &other.s2;
        self.t += &other.t;
        self.u += &other.u;
    }

    fn accumulate(&mut self, x: &[f64], w: &WeightFunction) -> Result<()> {
        let d = self.d;
        let s = sample_stats(x, w)?;
        let l = &s.logx;
        for j in 0..d {
            let f1sq = s.f1[j] * s.f1[j];
            self.c[j] += f1sq;
            self.s2[j] += s.f2[j];
            self.u[j] += s.fdiag[j];
            let g = &mut self.g[j];
            for k in 0..d {
                self.b[(j, k)] += f1sq * l[k];
                self.t[(j, k)] += s.f2[j] * l[k];
                let fl = f1sq * l[k];
                // Upper triangle only; mirrored once at the end.
                for m in k..d {
                    g[(k, m)] += fl * l[m];
                }
            }
        }
        self.n += 1;
        Ok(())
    }

    fn mirror(&mut self) {
        for g in &mut self.g {
            for k in 0..self.d {
                for m in (k + 1)..self.d {
                    g[(m, k)] = g[(k, m)];
                }
            }
        }
    }

    /// Summed objective at `(μ, Θ)` evaluated from the aggregates.
    pub fn objective(&self, mu: &DVector<f64>, theta: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for j in 0..self.d {
            let a = mu[j] - 1.0;
            let row = theta.row(j).transpose();
            let gq = &self.g[j] * &row;
            total += a * a * self.c[j] - 2.0 * a * self.b.row(j).dot(&row.transpose())
                + row.dot(&gq)
                + a * self.s2[j]
                - self.t.row(j).dot(&row.transpose())
                - theta[(j, j)] * self.u[j];
        }
        total
    }
}

/// Aggregates `samples` (an `n × d` matrix of points in `(0, ∞)^d`).
pub fn precompute(samples: &DMatrix<f64>, w: &WeightFunction) -> Result<SufficientStats> {
    let (n, d) = samples.shape();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let chunks = n.div_ceil(par::CHUNK);
    let partials = par::map_indices(chunks, |c| {
        let mut acc = SufficientStats::zeros(d);
        let mut row = vec![0.0; d];
        for i in (c * par::CHUNK)..((c + 1) * par::CHUNK).min(n) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = samples[(i, j)];
            }
            acc.accumulate(&row, w).map_err(|e| match e {
                Error::NonPositiveCoordinate { index, value } => Error::InvalidArgument(format!(
                    "sample {i}, coordinate {index} is not positive ({value})"
                )),
                other => other,
            })?;
        }
        Ok(acc)
    });
    let mut total = SufficientStats::zeros(d);
    for partial in partials {
        total.merge(&partial?);
    }
    total.mirror();
    Ok(total)
}

/// `sign(z)·max(|z| − t, 0)`.
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Minimizes `α δ² + β δ + p Σ_i |a_i + s_i δ|` exactly (`α > 0`, `p ≥ 0`).
fn minimize_piecewise(alpha: f64, beta: f64, p: f64, terms: &[(f64, f64)]) -> f64 {
    let f = |x: f64| {
        alpha * x * x + beta * x + p * terms.iter().map(|(a, s)| (a + s * x).abs()).sum::<f64>()
    };
    let mut kinks: Vec<f64> = terms.iter().map(|(a, s)| -a / s).collect();
    kinks.sort_by(|a, b| a.total_cmp(b));
    let mut candidates = kinks.clone();
    let mut bounds = vec![f64::NEG_INFINITY];
    bounds.extend(&kinks);
    bounds.push(f64::INFINITY);
    for win in bounds.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let probe = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0,
            (false, true) => hi - 1.0,
            (false, false) => 0.0,
        };
        let slope: f64 = terms.iter().map(|(a, s)| s * (a + s * probe).signum()).sum();
        let stationary = (-(beta + p * slope) / (2.0 * alpha)).clamp(lo, hi);
        candidates.push(stationary);
    }
    let mut best = candidates[0];
    let mut best_val = f(best);
    for &c in &candidates[1..] {
        let v = f(c);
        if v < best_val {
            best = c;
            best_val = v;
        }
    }
    best
}

/// A coordinate that could not be updated because its curvature vanished.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Degenerate {
    Mu(usize),
    Lambda(usize, usize),
}

/// Mutable iterate of the coordinate descent.
///
/// `q` caches `G_j Θ_j·` in row `j` so that every coordinate step is `O(d)`.
#[derive(Debug, Clone)]
pub struct CoordinateState {
    pub mu: DVector<f64>,
    pub lambda: LambdaUpper,
    theta: DMatrix<f64>,
    q: DMatrix<f64>,
    pub degenerate: BTreeSet<Degenerate>,
}

impl CoordinateState {
    pub fn new(stats: &SufficientStats, mu: DVector<f64>, lambda: LambdaUpper) -> Result<Self> {
        if mu.len() != stats.d || lambda.dim() != stats.d {
            return Err(Error::DimensionMismatch {
                expected: stats.d,
                got: mu.len().min(lambda.dim()),
            });
        }
        let mut state = CoordinateState {
            mu,
            theta: DMatrix::zeros(stats.d, stats.d),
            q: DMatrix::zeros(stats.d, stats.d),
            lambda,
            degenerate: BTreeSet::new(),
        };
        state.refresh(stats);
        Ok(state)
    }

    pub fn zeros(stats: &SufficientStats) -> Self {
        Self::new(stats, DVector::zeros(stats.d), LambdaUpper::zeros(stats.d))
            .expect("dimensions match by construction")
    }

    /// Rebuilds `Θ` and the cache from `Λ`, discarding accumulated rounding.
    fn refresh(&mut self, stats: &SufficientStats) {
        self.theta = lambda_to_theta(&self.lambda).into_inner();
        for j in 0..stats.d {
            let row = &stats.g[j] * self.theta.row(j).transpose();
            self.q.set_row(j, &row.transpose());
        }
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    /// Partial derivative of the smooth objective with respect to `μ_j`.
    pub fn mu_partial(&self, stats: &SufficientStats, j: usize) -> f64 {
        let a = self.mu[j] - 1.0;
        let tb = self.theta.row(j).dot(&stats.b.row(j));
        2.0 * a * stats.c[j] - 2.0 * tb + stats.s2[j]
    }

    /// `(α, β)` such that the smooth objective along `Λ_jk ↦ Λ_jk + δ`
    /// changes by `α δ² + β δ`.
    fn lambda_quadratic(&self, stats: &SufficientStats, j: usize, k: usize) -> (f64, f64) {
        let gj = &stats.g[j];
        let gk = &stats.g[k];
        let alpha = (gj[(k, k)] + gj[(j, j)] - 2.0 * gj[(j, k)])
            + (gk[(j, j)] + gk[(k, k)] - 2.0 * gk[(j, k)]);
        let (aj, ak) = (self.mu[j] - 1.0, self.mu[k] - 1.0);
        let beta_j = -2.0 * aj * (stats.b[(j, k)] - stats.b[(j, j)])
            + 2.0 * (self.q[(j, k)] - self.q[(j, j)])
            - (stats.t[(j, k)] - stats.t[(j, j)])
            + stats.u[j];
        let beta_k = -2.0 * ak * (stats.b[(k, j)] - stats.b[(k, k)])
            + 2.0 * (self.q[(k, j)] - self.q[(k, k)])
            - (stats.t[(k, j)] - stats.t[(k, k)])
            + stats.u[k];
        (alpha, beta_j + beta_k)
    }

    /// Partial derivative of the smooth objective with respect to `Λ_jk`.
    pub fn lambda_partial(&self, stats: &SufficientStats, j: usize, k: usize) -> f64 {
        self.lambda_quadratic(stats, j, k).1
    }

    /// Exact minimization over `μ_j`; `penalty` applies to `|μ_j|`.
    /// Returns the new value.
    pub fn update_mu(&mut self, stats: &SufficientStats, j: usize, penalty: f64) -> f64 {
        let c = stats.c[j];
        if !(c > 0.0) {
            self.degenerate.insert(Degenerate::Mu(j));
            return self.mu[j];
        }
        let tb = self.theta.row(j).dot(&stats.b.row(j));
        let unpenalized = 1.0 + (tb - stats.s2[j] / 2.0) / c;
        let new = if penalty > 0.0 {
            // c (μ − μ*)² + p|μ| ⇒ soft threshold of μ* at p / 2c.
            soft_threshold(unpenalized, penalty / (2.0 * c))
        } else {
            unpenalized
        };
        self.mu[j] = new;
        new
    }

    /// Exact minimization over `Λ_jk` (`j < k`) of the smooth objective plus
    /// `penalty·|Λ_jk|` (and `diag_penalty·(|Θ_jj| + |Θ_kk|)` when non-zero).
    /// Returns the new value.
    pub fn update_lambda(
        &mut self,
        stats: &SufficientStats,
        j: usize,
        k: usize,
        penalty: f64,
        diag_penalty: f64,
    ) -> f64 {
        debug_assert!(j < k);
        let old = self.lambda.get(j, k);
        let (alpha, beta) = self.lambda_quadratic(stats, j, k);
        if !(alpha > 0.0) || !beta.is_finite() {
            self.degenerate.insert(Degenerate::Lambda(j, k));
            return old;
        }
        let new = if diag_penalty > 0.0 {
            let terms = [
                (old, 1.0),
                (self.theta[(j, j)], -1.0),
                (self.theta[(k, k)], -1.0),
            ];
            // Penalties differ per term only through their weight; fold the
            // ℓ1 weight on Λ_jk into its term.
            let scaled = [
                (terms[0].0 * penalty / diag_penalty, terms[0].1 * penalty / diag_penalty),
                terms[1],
                terms[2],
            ];
            let delta = minimize_piecewise(alpha, beta, diag_penalty, &scaled);
            if (old + delta).abs() <= f64::EPSILON * old.abs() {
                0.0
            } else {
                old + delta
            }
        } else {
            soft_threshold(2.0 * alpha * old - beta, penalty) / (2.0 * alpha)
        };
        let delta = new - old;
        if delta != 0.0 {
            debug_assert!(
                alpha * delta * delta + beta * delta + penalty * (new.abs() - old.abs())
                    <= 1e-9 * (1.0 + (beta * delta).abs()),
                "coordinate step increased the objective"
            );
            self.lambda.set(j, k, new);
            self.theta[(j, k)] += delta;
            self.theta[(k, j)] += delta;
            self.theta[(j, j)] -= delta;
            self.theta[(k, k)] -= delta;
            for m in 0..stats.d {
                self.q[(j, m)] += delta * (stats.g[j][(m, k)] - stats.g[j][(m, j)]);
                self.q[(k, m)] += delta * (stats.g[k][(m, j)] - stats.g[k][(m, k)]);
            }
        }
        new
    }
}

/// A fitted `(μ̂, Λ̂, Θ̂)` with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub r: f64,
    pub mu: Location,
    pub lambda: LambdaUpper,
    pub theta: ThetaMatrix,
    /// Smooth objective `Σ_i o(μ̂, Θ̂, x_i)`.
    pub objective: f64,
    /// Objective plus the penalty actually applied.
    pub penalized: f64,
    pub sweeps_used: usize,
    pub converged: bool,
    pub degenerate: Vec<Degenerate>,
}

impl Estimate {
    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    /// Zero count among the `d(d−1)/2` free entries of `Λ̂`.
    pub fn zero_count(&self) -> usize {
        let d = self.dim();
        d * (d - 1) / 2 - self.lambda.nonzeros().len()
    }
}

/// Coefficient `√n·r` multiplying the ℓ1 penalty.
pub fn penalty_weight(n: usize, r: f64) -> f64 {
    (n as f64).sqrt() * r
}

fn penalized_objective(
    stats: &SufficientStats,
    state: &CoordinateState,
    penalty: f64,
    config: &FitConfig,
) -> f64 {
    let mut value = stats.objective(&state.mu, &state.theta);
    if penalty > 0.0 {
        value += penalty * state.lambda.entries().iter().map(|v| v.abs()).sum::<f64>();
        if config.penalize_mu {
            value += penalty * state.mu.iter().map(|v| v.abs()).sum::<f64>();
        }
        if config.penalize_diag {
            value += penalty * state.theta.diagonal().iter().map(|v| v.abs()).sum::<f64>();
        }
    }
    value
}

/// One full sweep: all `μ_j`, then every `Λ_jk` with `j < k`.
fn sweep(
    stats: &SufficientStats,
    state: &mut CoordinateState,
    penalty: f64,
    config: &FitConfig,
    order: &mut [(usize, usize)],
    rng: &mut Option<ChaCha8Rng>,
) {
    let mu_pen = if config.penalize_mu { penalty } else { 0.0 };
    let diag_pen = if config.penalize_diag { penalty } else { 0.0 };
    for j in 0..stats.d {
        state.update_mu(stats, j, mu_pen);
    }
    if let Some(rng) = rng.as_mut() {
        order.shuffle(rng);
    }
    for &(j, k) in order.iter() {
        state.update_lambda(stats, j, k, penalty, diag_pen);
    }
    state.refresh(stats);
}

/// Fits at tuning parameter `r`, starting from `init` (zeros when `None`).
pub fn fit(
    stats: &SufficientStats,
    r: f64,
    init: Option<&Estimate>,
    config: &FitConfig,
) -> Result<Estimate> {
    config.validate()?;
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("tuning parameter must be >= 0, got {r}")));
    }
    let mut state = match init {
        Some(est) => CoordinateState::new(
            stats,
            est.mu.as_vector().clone(),
            est.lambda.clone(),
        )?,
        None => CoordinateState::zeros(stats),
    };
    let penalty = if r.is_finite() { penalty_weight(stats.n, r) } else { f64::MAX };
    let d = stats.d;
    let mut order: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .collect();
    let mut rng = config.seed.map(ChaCha8Rng::seed_from_u64);

    let mut previous = penalized_objective(stats, &state, penalty, config);
    let mut sweeps_used = 0;
    let mut converged = false;
    while sweeps_used < config.max_sweeps {
        sweep(stats, &mut state, penalty, config, &mut order, &mut rng);
        sweeps_used += 1;
        let current = penalized_objective(stats, &state, penalty, config);
        let scale = previous.abs().max(current.abs()).max(f64::MIN_POSITIVE);
        if current > previous + 1e-10 * scale {
            log::warn!("penalized objective increased in sweep {sweeps_used}: {previous} -> {current}");
        }
        let decrease = previous - current;
        previous = current;
        if decrease <= config.tol * scale {
            converged = true;
            break;
        }
    }

    let theta = lambda_to_theta(&state.lambda);
    let objective = stats.objective(&state.mu, theta.entries());
    Ok(Estimate {
        r,
        mu: Location::new(state.mu.clone())?,
        lambda: state.lambda.clone(),
        theta,
        objective,
        penalized: previous,
        sweeps_used,
        converged,
        degenerate: state.degenerate.into_iter().collect(),
    })
}

/// Unregularized fit from zeros.
pub fn fit_basic(stats: &SufficientStats, config: &FitConfig) -> Result<Estimate> {
    fit(stats, 0.0, None, config)
}

/// Fits along a descending grid with warm starts.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub grid: Vec<f64>,
    pub estimates: Vec<Estimate>,
    /// Wall time per grid point, seconds.
    pub timings: Vec<f64>,
}

/// Grid `multiplier·√(log d / n)` for each multiplier.
pub fn scaled_grid(multipliers: &[f64], d: usize, n: usize) -> Vec<f64> {
    let unit = ((d as f64).ln() / n as f64).sqrt();
    multipliers.iter().map(|m| m * unit).collect()
}

pub fn default_grid(d: usize, n: usize) -> Vec<f64> {
    scaled_grid(&DEFAULT_MULTIPLIERS, d, n)
}

pub fn fit_path(stats: &SufficientStats, grid: &[f64], config: &FitConfig) -> Result<PathResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty tuning-parameter grid".into()));
    }
    if grid.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidArgument("grid values must be nonnegative".into()));
    }
    if grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidArgument("grid must be strictly descending".into()));
    }
    let mut estimates: Vec<Estimate> = Vec::with_capacity(grid.len());
    let mut timings = Vec::with_capacity(grid.len());
    for &r in grid {
        let start = Instant::now();
        let est = fit(stats, r, estimates.last(), config)?;
        timings.push(start.elapsed().as_secs_f64());
        estimates.push(est);
    }
    Ok(PathResult {
        grid: grid.to_vec(),
        estimates,
        timings,
    })
}

/// Largest KKT violation of an estimate at penalty weight `√n·r`
/// (only the default penalty layout: ℓ1 on `Λ`, nothing on `μ` or the diagonal).
pub fn kkt_violation(stats: &SufficientStats, est: &Estimate) -> Result<f64> {
    let state = CoordinateState::new(stats, est.mu.as_vector().clone(), est.lambda.clone())?;
    let penalty = penalty_weight(stats.n, est.r);
    let mut worst = 0.0_f64;
    for j in 0..stats.d {
        worst = worst.max(state.mu_partial(stats, j).abs());
        for k in (j + 1)..stats.d {
            let g = state.lambda_partial(stats, j, k);
            let v = est.lambda.get(j, k);
            let viol = if v == 0.0 {
                (g.abs() - penalty).max(0.0)
            } else {
                (g + penalty * v.signum()).abs()
            };
            worst = worst.max(viol);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(5.0, 2.0), 3.0);
        assert_eq!(soft_threshold(-1.0, 2.0), 0.0);
        assert_eq!(soft_threshold(-3.5, 0.0), -3.5);
        assert_eq!(soft_threshold(-3.5, 1.0), -2.5);
    }

    #[test]
    fn piecewise_matches_soft_threshold_for_single_kink() {
        for &(alpha, beta, p, a) in &[
            (1.0, 3.0, 1.0, 0.5),
            (2.0, -4.0, 10.0, -1.0),
            (0.5, 0.1, 0.0, 2.0),
        ] {
            let delta = minimize_piecewise(alpha, beta, p, &[(a, 1.0)]);
            let expected = soft_threshold(2.0 * alpha * a - beta, p) / (2.0 * alpha) - a;
            assert!((delta - expected).abs() < 1e-12, "{delta} vs {expected}");
        }
    }

    #[test]
    fn single_sample_mu_update() {
        // One sample with x_1 = e: c = 1, s2 = 6, Θ = 0 ⇒ μ_1 = 1 − 3 = −2.
        let samples = DMatrix::from_row_slice(1, 2, &[std::f64::consts::E, 2.0]);
        let stats = precompute(&samples, &WeightFunction::log()).unwrap();
        let mut state = CoordinateState::zeros(&stats);
        let v = state.update_mu(&stats, 0, 0.0);
        assert!((v + 2.0).abs() < 1e-14);
        // Grid search around the minimizer agrees.
        let obj = |m: f64| {
            let mu = DVector::from_vec(vec![m, state.mu[1]]);
            stats.objective(&mu, &DMatrix::zeros(2, 2))
        };
        let best = (-4000..=0)
            .map(|i| i as f64 * 1e-3)
            .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
            .unwrap();
        assert!((best + 2.0).abs() < 1e-3);
        assert_eq!(state.update_mu(&stats, 0, 0.0), v);
    }

    #[test]
    fn degenerate_mu_is_flagged() {
        let samples = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 3.0]);
        let stats = precompute(&samples, &WeightFunction::log()).unwrap();
        let est = fit_basic(&stats, &FitConfig::default()).unwrap();
        assert!(est.degenerate.contains(&Degenerate::Mu(0)));
    }

    #[test]
    fn config_validation() {
        let cfg = FitConfig { tol: 0.0, ..FitConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = FitConfig { max_sweeps: 0, ..FitConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn path_rejects_unsorted_grid() {
        let samples = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 1.5, 3.0]);
        let stats = precompute(&samples, &WeightFunction::log()).unwrap();
        assert!(fit_path(&stats, &[0.1, 1.0], &FitConfig::default()).is_err());
        assert!(fit_path(&stats, &[], &FitConfig::default()).is_err());
    }
}

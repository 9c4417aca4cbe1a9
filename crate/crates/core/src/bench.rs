//! Evaluation metrics and replicated simulation experiments.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::format_sig12;
use crate::model::{theta_to_gamma, LambdaUpper, ThetaMatrix, Variogram};
use crate::scorematch::WeightFunction;
use crate::simulate::{
    brownian_variogram, rng, sample_hr_pareto, sample_max_stable, threshold_exceedances,
    tridiagonal_theta, ExceedanceBatch,
};
use crate::solver::{fit_path, precompute, scaled_grid, FitConfig, DEFAULT_MULTIPLIERS};
use crate::stats::mean_std;

/// `(1/d² Σ_ij (A_ij − B_ij)²)^{1/2}`.
pub fn rmse(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    if est.shape() != truth.shape() {
        return Err(Error::DimensionMismatch {
            expected: truth.nrows(),
            got: est.nrows(),
        });
    }
    let count = (est.nrows() * est.ncols()) as f64;
    Ok(((est - truth).norm_squared() / count).sqrt())
}

pub fn rmse_theta(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    rmse(est, truth)
}

/// RMSE between the variogram implied by `est_theta` (anchor `m`) and the
/// truth; `None` when the anchor block cannot be inverted.
pub fn rmse_gamma(est_theta: &ThetaMatrix, truth: &Variogram, m: usize) -> Result<Option<f64>> {
    if est_theta.dim() != truth.dim() {
        return Err(Error::DimensionMismatch {
            expected: truth.dim(),
            got: est_theta.dim(),
        });
    }
    match theta_to_gamma(est_theta, m) {
        Ok(gamma) => rmse(gamma.entries(), truth.entries()).map(Some),
        Err(e) => {
            log::debug!("variogram reconstruction failed: {e}");
            Ok(None)
        }
    }
}

/// Fraction of exactly-zero entries among the `d(d−1)/2` free entries.
pub fn zero_ratio(lambda: &LambdaUpper) -> f64 {
    let d = lambda.dim();
    let total = d * (d - 1) / 2;
    if total == 0 {
        return 1.0;
    }
    (total - lambda.nonzeros().len()) as f64 / total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse_theta: f64,
    pub rmse_gamma: Option<f64>,
    pub zero_ratio: f64,
    pub t_pre: f64,
    pub t_opt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Pareto,
    Maxstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridReference {
    #[serde(rename = "n")]
    N,
    #[serde(rename = "n_u")]
    NU,
}

/// Experiment configuration, as read from the JSON config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub replicates: usize,
    #[serde(default = "default_multipliers")]
    pub grid_multipliers: Vec<f64>,
    pub design: Design,
    #[serde(default)]
    pub quantile: Option<f64>,
    pub seed: u64,
    #[serde(default = "default_reference")]
    pub grid_reference: GridReference,
}

fn default_multipliers() -> Vec<f64> {
    DEFAULT_MULTIPLIERS.to_vec()
}

fn default_reference() -> GridReference {
    GridReference::N
}

impl ExperimentSpec {
    /// Checks the spec; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::InvalidArgument(format!("{field}: {msg}")));
        if self.d < 2 {
            return bad("d", format!("must be >= 2, got {}", self.d));
        }
        if self.n == 0 {
            return bad("n", "must be >= 1".into());
        }
        if self.replicates == 0 {
            return bad("N", "must be >= 1".into());
        }
        if self.grid_multipliers.is_empty() {
            return bad("grid_multipliers", "must not be empty".into());
        }
        if self.grid_multipliers.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return bad("grid_multipliers", "must be finite and nonnegative".into());
        }
        if self.grid_multipliers.windows(2).any(|w| !(w[0] > w[1])) {
            return bad("grid_multipliers", "must be strictly descending".into());
        }
        match (self.design, self.quantile) {
            (Design::Maxstable, None) => return bad("quantile", "required for maxstable".into()),
            (Design::Maxstable, Some(q)) if !(q > 0.0 && q < 1.0) => {
                return bad("quantile", format!("must be in (0, 1), got {q}"))
            }
            _ => {}
        }
        Ok(())
    }
}

/// Replicates of one run: metrics per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub n_u: usize,
    /// Per grid point, in grid order.
    pub r_values: Vec<f64>,
    pub metrics: Vec<Metrics>,
    pub converged: Vec<bool>,
    pub degenerate: usize,
    /// Failure reported by the sampler or solver, if any.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub r_multiplier: f64,
    pub r_value: f64,
    pub rmse_theta_mean: f64,
    pub rmse_theta_std: f64,
    pub rmse_gamma_mean: Option<f64>,
    pub rmse_gamma_std: Option<f64>,
    pub zero_ratio_mean: f64,
    pub zero_ratio_std: f64,
    pub t_pre_mean: Option<f64>,
    pub t_opt_mean: Option<f64>,
    pub n: usize,
    pub n_u_mean: f64,
    pub d: usize,
    #[serde(rename = "N")]
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub replicates: Vec<ReplicateResult>,
    pub rows: Vec<AggregateRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Fan replicates out over the thread pool (metric mode).
    pub parallel: bool,
}

/// Anchor used for the variogram reconstruction.
pub const GAMMA_ANCHOR: usize = 0;

fn simulate_batch(spec: &ExperimentSpec, gamma: &Variogram, replicate: usize) -> Result<ExceedanceBatch> {
    let mut stream = rng(spec.seed, replicate as u64);
    match spec.design {
        Design::Pareto => sample_hr_pareto(gamma, spec.n, &mut stream),
        Design::Maxstable => {
            let raw = sample_max_stable(gamma, spec.n, &mut stream)?;
            threshold_exceedances(&raw, spec.quantile.unwrap_or(0.95))
        }
    }
}

fn run_replicate(
    spec: &ExperimentSpec,
    gamma: &Variogram,
    truth: &ThetaMatrix,
    config: &FitConfig,
    replicate: usize,
) -> ReplicateResult {
    let failed = |n_u: usize, e: Error| ReplicateResult {
        replicate,
        n_u,
        r_values: Vec::new(),
        metrics: Vec::new(),
        converged: Vec::new(),
        degenerate: 0,
        error: Some(e.to_string()),
    };
    let batch = match simulate_batch(spec, gamma, replicate) {
        Ok(b) => b,
        Err(e) => return failed(0, e),
    };
    let n_u = batch.n_u();
    let w = WeightFunction::log();
    let start = Instant::now();
    let stats = match precompute(&batch.samples, &w) {
        Ok(s) => s,
        Err(e) => return failed(n_u, e),
    };
    let t_pre = start.elapsed().as_secs_f64();
    let n_ref = match spec.grid_reference {
        GridReference::N => spec.n,
        GridReference::NU => n_u,
    };
    let grid = scaled_grid(&spec.grid_multipliers, spec.d, n_ref);
    let start = Instant::now();
    let path = match fit_path(&stats, &grid, config) {
        Ok(p) => p,
        Err(e) => return failed(n_u, e),
    };
    let t_opt = start.elapsed().as_secs_f64();
    let mut metrics = Vec::with_capacity(grid.len());
    let mut degenerate = 0;
    for est in &path.estimates {
        degenerate += est.degenerate.len();
        let rmse_theta = rmse(est.theta.entries(), truth.entries()).expect("dimensions match");
        let rmse_gamma = rmse_gamma(&est.theta, gamma, GAMMA_ANCHOR).expect("dimensions match");
        metrics.push(Metrics {
            rmse_theta,
            rmse_gamma,
            zero_ratio: zero_ratio(&est.lambda),
            t_pre,
            t_opt,
        });
    }
    ReplicateResult {
        replicate,
        n_u,
        r_values: grid,
        converged: path.estimates.iter().map(|e| e.converged).collect(),
        metrics,
        degenerate,
        error: None,
    }
}

/// Runs all replicates of `spec` and aggregates per grid point.
///
/// Replicate `i` draws from stream `i` of the spec seed, so results do not
/// depend on `options.parallel`. Failed replicates are kept (with their
/// error) and excluded from the aggregates.
pub fn run_experiment(spec: &ExperimentSpec, options: RunOptions) -> Result<ExperimentResult> {
    spec.validate()?;
    let gamma = brownian_variogram(spec.d)?;
    let truth = tridiagonal_theta(spec.d)?;
    let config = FitConfig::default();
    let replicates: Vec<ReplicateResult> = if options.parallel {
        crate::par::map_indices(spec.replicates, |i| run_replicate(spec, &gamma, &truth, &config, i))
    } else {
        (0..spec.replicates)
            .map(|i| run_replicate(spec, &gamma, &truth, &config, i))
            .collect()
    };
    for rep in &replicates {
        if let Some(e) = &rep.error {
            log::warn!("replicate {} failed: {e}", rep.replicate);
        }
    }
    let rows = aggregate(spec, &replicates);
    Ok(ExperimentResult {
        spec: spec.clone(),
        replicates,
        rows,
    })
}

fn aggregate(spec: &ExperimentSpec, replicates: &[ReplicateResult]) -> Vec<AggregateRow> {
    let ok: Vec<&ReplicateResult> = replicates.iter().filter(|r| r.error.is_none()).collect();
    let n_u: Vec<f64> = ok.iter().map(|r| r.n_u as f64).collect();
    let n_u_mean = mean_std(&n_u).map_or(f64::NAN, |(m, _)| m);
    let column = |g: usize, f: &dyn Fn(&Metrics) -> f64| -> Vec<f64> {
        ok.iter().map(|r| f(&r.metrics[g])).collect()
    };
    spec.grid_multipliers
        .iter()
        .enumerate()
        .map(|(g, &mult)| {
            let r_vals: Vec<f64> = ok.iter().map(|r| r.r_values[g]).collect();
            let (rt_m, rt_s) = mean_std(&column(g, &|m| m.rmse_theta)).unwrap_or((f64::NAN, f64::NAN));
            let gammas: Vec<f64> = ok.iter().filter_map(|r| r.metrics[g].rmse_gamma).collect();
            let rg = mean_std(&gammas);
            let (zr_m, zr_s) = mean_std(&column(g, &|m| m.zero_ratio)).unwrap_or((f64::NAN, f64::NAN));
            let t_pre = mean_std(&column(g, &|m| m.t_pre)).map(|(m, _)| m);
            let t_opt = mean_std(&column(g, &|m| m.t_opt)).map(|(m, _)| m);
            AggregateRow {
                r_multiplier: mult,
                r_value: mean_std(&r_vals).map_or(f64::NAN, |(m, _)| m),
                rmse_theta_mean: rt_m,
                rmse_theta_std: rt_s,
                rmse_gamma_mean: rg.map(|(m, _)| m),
                rmse_gamma_std: rg.map(|(_, s)| s),
                zero_ratio_mean: zr_m,
                zero_ratio_std: zr_s,
                t_pre_mean: t_pre,
                t_opt_mean: t_opt,
                n: spec.n,
                n_u_mean,
                d: spec.d,
                replicates: spec.replicates,
            }
        })
        .collect()
}

/// Column list of the aggregate table, in order.
pub const TABLE_COLUMNS: [&str; 14] = [
    "r_multiplier",
    "r_value",
    "rmse_theta_mean",
    "rmse_theta_std",
    "rmse_gamma_mean",
    "rmse_gamma_std",
    "zero_ratio_mean",
    "zero_ratio_std",
    "t_pre_mean",
    "t_opt_mean",
    "n",
    "n_u_mean",
    "d",
    "N",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    /// `json` for a `.json` extension, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        if path.extension().is_some_and(|e| e == "json") {
            TableFormat::Json
        } else {
            TableFormat::Csv
        }
    }
}

/// Whether measured wall times are written. Omitting them makes the table a
/// pure function of the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timings {
    Include,
    Omit,
}

fn strip_timings(rows: &[AggregateRow], timings: Timings) -> Vec<AggregateRow> {
    rows.iter()
        .cloned()
        .map(|mut r| {
            if timings == Timings::Omit {
                r.t_pre_mean = None;
                r.t_opt_mean = None;
            }
            r
        })
        .collect()
}

pub fn table_to_csv(rows: &[AggregateRow]) -> String {
    let opt = |v: Option<f64>| v.map(format_sig12).unwrap_or_default();
    let mut out = TABLE_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            format_sig12(r.r_multiplier),
            format_sig12(r.r_value),
            format_sig12(r.rmse_theta_mean),
            format_sig12(r.rmse_theta_std),
            opt(r.rmse_gamma_mean),
            opt(r.rmse_gamma_std),
            format_sig12(r.zero_ratio_mean),
            format_sig12(r.zero_ratio_std),
            opt(r.t_pre_mean),
            opt(r.t_opt_mean),
            r.n,
            format_sig12(r.n_u_mean),
            r.d,
            r.replicates
        );
    }
    out
}

/// Writes the aggregate rows as CSV (header = [`TABLE_COLUMNS`]) or as a
/// JSON array of row objects.
pub fn emit_table(
    rows: &[AggregateRow],
    format: TableFormat,
    timings: Timings,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let rows = strip_timings(rows, timings);
    let text = match format {
        TableFormat::Csv => table_to_csv(&rows),
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
            s.push('\n');
            s
        }
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

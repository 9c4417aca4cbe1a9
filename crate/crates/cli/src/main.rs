//! `hrscore` — simulate Hüsler–Reiss exceedances, fit score-matching
//! estimates, run regularization paths and reproduce the benchmark tables.
//!
//! Exit codes: 0 success, 1 runtime/numeric failure, 2 usage or config error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use nalgebra::DMatrix;
use serde_json::json;

use hr_score::bench::{self, Design, ExperimentSpec, RunOptions, TableFormat, Timings};
use hr_score::io::{self, EstimateJson, MatrixJson, SampleManifest};
use hr_score::model::{self, ThetaMatrix, Variogram};
use hr_score::par::with_threads;
use hr_score::scorematch::WeightFunction;
use hr_score::simulate::{self, Source};
use hr_score::solver::{self, FitConfig, DEFAULT_MULTIPLIERS};

#[derive(Parser, Debug)]
#[command(name = "hrscore", version, about = "Score-matching estimation for Hüsler–Reiss models")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Worker threads. 1 keeps everything on the calling thread.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    threads: u16,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw exceedances from the Brownian-variogram design.
    Simulate {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = DesignArg::Pareto)]
        design: DesignArg,
        /// Fréchet quantile used to threshold max-stable data.
        #[arg(long)]
        quantile: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample CSV; the manifest goes next to it as `<stem>.manifest.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a single estimate at tuning parameter `r`.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_sweeps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a warm-started path over `multiplier·√(log d / n)`.
    Path {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        grid_multipliers: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_sweeps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config and write the aggregate table (CSV or `.json`).
    Reproduce {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Leave the timing columns empty so the table depends only on the config.
        #[arg(long)]
        no_timings: bool,
    },
    /// Convert between parametrizations.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        what: Conversion,
        /// Anchor index, 1-based.
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DesignArg {
    Pareto,
    Maxstable,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Conversion {
    Gamma2theta,
    Theta2gamma,
    Gamma2mulambda,
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn usage(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, err: err.into() }
}

fn runtime(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, err: err.into() }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    let threads = cli.threads as usize;
    let outcome = with_threads(threads, || run(cli.command, threads));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command, threads: usize) -> CmdResult {
    match command {
        Command::Simulate { d, n, design, quantile, seed, out } => {
            cmd_simulate(d, n, design, quantile, seed, &out)
        }
        Command::Fit { data, r, tol, max_sweeps, out } => cmd_fit(&data, r, tol, max_sweeps, &out),
        Command::Path { data, grid_multipliers, tol, max_sweeps, out } => {
            cmd_path(&data, grid_multipliers, tol, max_sweeps, &out)
        }
        Command::Reproduce { config, out, no_timings } => {
            cmd_reproduce(&config, &out, no_timings, threads)
        }
        Command::Convert { input, what, m, out } => cmd_convert(&input, what, m, &out),
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn cmd_simulate(
    d: usize,
    n: usize,
    design: DesignArg,
    quantile: Option<f64>,
    seed: u64,
    out: &Path,
) -> CmdResult {
    if d < 2 {
        return Err(usage(anyhow!("--d must be at least 2")));
    }
    if n == 0 {
        return Err(usage(anyhow!("--n must be positive")));
    }
    let gamma = simulate::brownian_variogram(d).map_err(runtime)?;
    let mut rng = simulate::rng(seed, 0);
    let batch = match design {
        DesignArg::Pareto => {
            if quantile.is_some() {
                warn!("--quantile is ignored for the pareto design");
            }
            simulate::sample_hr_pareto(&gamma, n, &mut rng).map_err(runtime)?
        }
        DesignArg::Maxstable => {
            let q = quantile.ok_or_else(|| usage(anyhow!("--quantile is required for --design maxstable")))?;
            if !(q > 0.0 && q < 1.0) {
                return Err(usage(anyhow!("--quantile must lie in (0, 1), got {q}")));
            }
            let raw = simulate::sample_max_stable(&gamma, n, &mut rng).map_err(runtime)?;
            simulate::threshold_exceedances(&raw, q).map_err(runtime)?
        }
    };
    io::write_matrix_csv(out, &batch.samples).map_err(runtime)?;
    let manifest = SampleManifest {
        d,
        n,
        n_u: batch.n_u(),
        seed,
        source: batch.source,
        gamma_design: "brownian".into(),
        quantile: match batch.source {
            Source::ExactPareto => None,
            Source::MaxStableThresholded => quantile,
        },
    };
    io::write_json(manifest_path(out), &manifest).map_err(runtime)?;
    info!("wrote {} of {} samples to {}", batch.n_u(), n, out.display());
    println!("{}", json!({ "d": d, "n": n, "n_u": batch.n_u() }));
    Ok(())
}

fn fit_config(tol: f64, max_sweeps: usize) -> Result<FitConfig, Failure> {
    let config = FitConfig { tol, max_sweeps, ..FitConfig::default() };
    config.validate().map_err(usage)?;
    Ok(config)
}

fn load_stats(data: &Path) -> Result<solver::SufficientStats, Failure> {
    let samples = io::read_samples_csv(data).map_err(runtime)?;
    solver::precompute(&samples, &WeightFunction::log()).map_err(runtime)
}

fn cmd_fit(data: &Path, r: f64, tol: f64, max_sweeps: usize, out: &Path) -> CmdResult {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(usage(anyhow!("--r must be finite and nonnegative, got {r}")));
    }
    let config = fit_config(tol, max_sweeps)?;
    let stats = load_stats(data)?;
    let est = solver::fit(&stats, r, None, &config).map_err(runtime)?;
    if !est.converged {
        warn!("no convergence within {} sweeps", config.max_sweeps);
    }
    io::write_json(out, &EstimateJson::from(&est)).map_err(runtime)?;
    println!(
        "{}",
        json!({
            "objective": est.objective,
            "sweeps": est.sweeps_used,
            "zero_ratio": bench::zero_ratio(&est.lambda),
            "converged": est.converged,
        })
    );
    Ok(())
}

/// Sorts descending and drops duplicates, warning if anything changed.
fn normalize_multipliers(mut mults: Vec<f64>) -> Result<Vec<f64>, Failure> {
    if mults.is_empty() {
        return Err(usage(anyhow!("--grid-multipliers must not be empty")));
    }
    if let Some(bad) = mults.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
        return Err(usage(anyhow!("grid multipliers must be finite and nonnegative, got {bad}")));
    }
    let before = mults.clone();
    mults.sort_by(|a, b| b.total_cmp(a));
    mults.dedup();
    if mults != before {
        warn!("grid multipliers reordered to descending: {mults:?}");
    }
    Ok(mults)
}

fn cmd_path(
    data: &Path,
    multipliers: Option<Vec<f64>>,
    tol: f64,
    max_sweeps: usize,
    out: &Path,
) -> CmdResult {
    let mults = normalize_multipliers(multipliers.unwrap_or_else(|| DEFAULT_MULTIPLIERS.to_vec()))?;
    let config = fit_config(tol, max_sweeps)?;
    let stats = load_stats(data)?;
    let grid = solver::scaled_grid(&mults, stats.d, stats.n);
    let path = solver::fit_path(&stats, &grid, &config).map_err(runtime)?;
    let doc = json!({
        "d": stats.d,
        "n": stats.n,
        "grid_multipliers": mults,
        "r_values": path.grid,
        "estimates": io::path_to_json(&path),
        "zero_ratio": path.estimates.iter().map(|e| bench::zero_ratio(&e.lambda)).collect::<Vec<_>>(),
        "timings": path.timings,
    });
    io::write_json(out, &doc).map_err(runtime)?;
    let summary: Vec<_> = path
        .estimates
        .iter()
        .map(|e| json!({ "r": e.r, "sweeps": e.sweeps_used, "zero_ratio": bench::zero_ratio(&e.lambda) }))
        .collect();
    println!("{}", serde_json::Value::Array(summary));
    Ok(())
}

fn cmd_reproduce(config: &Path, out: &Path, no_timings: bool, threads: usize) -> CmdResult {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("cannot read config {}", config.display()))
        .map_err(usage)?;
    let spec: ExperimentSpec = serde_json::from_str(&text)
        .with_context(|| format!("invalid config {}", config.display()))
        .map_err(usage)?;
    spec.validate()
        .with_context(|| format!("invalid config {}", config.display()))
        .map_err(usage)?;
    if spec.design == Design::Pareto && spec.quantile.is_some() {
        warn!("quantile is ignored for the pareto design");
    }
    let result = bench::run_experiment(&spec, RunOptions { parallel: threads > 1 }).map_err(runtime)?;
    let failed = result.replicates.iter().filter(|r| r.error.is_some()).count();
    if failed == result.replicates.len() {
        return Err(runtime(anyhow!("all {failed} replicates failed")));
    }
    let timings = if no_timings { Timings::Omit } else { Timings::Include };
    bench::emit_table(&result.rows, TableFormat::from_path(out), timings, out).map_err(runtime)?;
    println!(
        "{}",
        json!({ "rows": result.rows.len(), "replicates": result.replicates.len(), "failed": failed })
    );
    Ok(())
}

fn write_matrix(out: &Path, m: &DMatrix<f64>) -> CmdResult {
    if out.extension().is_some_and(|e| e == "json") {
        io::write_json(out, &MatrixJson::from_matrix(m)).map_err(runtime)
    } else {
        io::write_matrix_csv(out, m).map_err(runtime)
    }
}

fn cmd_convert(input: &Path, what: Conversion, m: usize, out: &Path) -> CmdResult {
    let entries = io::read_matrix_any(input).map_err(runtime)?;
    let d = entries.nrows();
    if m == 0 || m > d {
        return Err(usage(anyhow!("--m must be in 1..={d}, got {m}")));
    }
    let anchor = m - 1;
    match what {
        Conversion::Gamma2theta => {
            let gamma = Variogram::new(entries).map_err(runtime)?;
            let (_, lambda) = model::hr_to_mu_lambda(&gamma, anchor).map_err(runtime)?;
            let theta = model::lambda_to_theta(&lambda);
            write_matrix(out, theta.entries())
        }
        Conversion::Gamma2mulambda => {
            let gamma = Variogram::new(entries).map_err(runtime)?;
            let (mu, lambda) = model::hr_to_mu_lambda(&gamma, anchor).map_err(runtime)?;
            let doc = json!({
                "d": d,
                "m": m,
                "mu": mu.as_vector().iter().copied().collect::<Vec<_>>(),
                "lambda_upper": lambda
                    .nonzeros()
                    .into_iter()
                    .map(|(j, k, v)| (j + 1, k + 1, v))
                    .collect::<Vec<_>>(),
            });
            io::write_json(out, &doc).map_err(runtime)
        }
        Conversion::Theta2gamma => {
            let theta = ThetaMatrix::new(entries).map_err(runtime)?;
            let gamma = model::theta_to_gamma(&theta, anchor).map_err(runtime)?;
            let mut discrepancy = 0.0_f64;
            for other in 0..d {
                let g = model::theta_to_gamma(&theta, other).map_err(runtime)?;
                discrepancy = discrepancy.max((g.entries() - gamma.entries()).amax());
            }
            write_matrix(out, gamma.entries())?;
            println!("{}", json!({ "max_anchor_discrepancy": discrepancy }));
            Ok(())
        }
    }
}

//! Score-matching estimation of (generalized) Hüsler–Reiss extreme-value
//! models.
//!
//! - [`model`]: parameter representations (`Γ`, `Σ[m]`, `μ`, `Λ`, `Θ`) and
//!   the exact maps between them, plus unnormalized log-densities.
//! - [`scorematch`]: the weighted score-matching objective and its gradient.
//! - [`solver`]: coordinate descent with an optional ℓ1 penalty and
//!   warm-started tuning-parameter paths.
//! - [`simulate`]: Brownian designs, Hüsler–Reiss Pareto samples and
//!   thresholded max-stable samples.
//! - [`bench`]: metrics and replicated experiments.
//!
//! Batch reductions and replicate fan-out use rayon when the `parallel`
//! feature (on by default) is enabled; the sequential build produces
//! bit-identical numbers.

pub mod bench;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod par;
pub mod scorematch;
pub mod simulate;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};

//! Recovery of gradient-sparse (piecewise-constant) signals on graphs from
//! noisy linear measurements.
//!
//! The main entry point is [`itale::run_itale`], which minimizes
//! `½‖y − Ax‖² + λ Σ c(x_i, x_j)` along a geometrically decaying penalty path,
//! denoising each proximal-gradient surrogate with alpha-expansion graph cuts.
//! A TV-regularized comparator, measurement designs, isometry diagnostics and a
//! cross-validated experiment harness live alongside it.

pub mod alpha_expansion;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod itale;
pub mod maxflow;
pub mod measurement;
pub mod tv;
mod union_find;

pub use alpha_expansion::{alpha_expansion, expansion_move, DenoiseResult, EdgeCost, LabelGrid};
pub use error::{ItaleError, Result};
pub use graph::{GraphTopology, Partition};
pub use itale::{run_itale, surrogate, GridRule, ItaleConfig, RegularizationPath};
pub use measurement::{MeasurementOperator, SamplingLaw};

/// Squared Euclidean norm.
pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Inner product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Root-mean-squared error `√(‖estimate − truth‖² / p)`.
pub fn rmse(estimate: &[f64], truth: &[f64]) -> f64 {
    let p = truth.len().max(1) as f64;
    let ss: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    (ss / p).sqrt()
}

//! Simulation harness: synthetic truths, random designs, noise, cross-validated
//! tuning of both recovery methods, and RMSE tables.
//!
//! Every random draw comes from a ChaCha20 stream keyed by the row seed, the
//! ratio index and a purpose tag, so rows are reproducible individually and
//! independent of scheduling order. For one seed and ratio the design and the
//! noise direction are shared across noise levels.

pub mod phantom;
pub mod signals;

use crate::alpha_expansion::EdgeCost;
use crate::error::{ItaleError, Result};
use crate::graph::{line_graph, GraphTopology};
use crate::itale::{run_itale, GridRule, ItaleConfig};
use crate::measurement::{fourier_from_indices, gaussian_design_from_rng, MeasurementOperator, SamplingLaw};
use crate::tv::{default_lambda_grid, solve_tv, TvConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

const STREAM_DESIGN: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_FOLDS: u64 = 2;

/// Flat key-value experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// `spike`, `wave`, `two_region`, `shepp_logan` or `image`.
    pub signal: String,
    /// Graymap or CSV file used when `signal = "image"`.
    pub image_path: Option<PathBuf>,
    /// Length of one-dimensional signals.
    pub p: usize,
    /// Side length of built-in phantoms.
    pub phantom_size: usize,
    pub n_segments: usize,
    pub segment_len: usize,
    pub amplitude: f64,
    pub n_breaks: usize,
    pub wave_amplitudes: Vec<f64>,
    /// `gaussian` or `fourier_weighted`.
    pub design: String,
    pub c0: f64,
    /// Undersampling ratios `n/p`.
    pub ratios: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Any of `itale`, `tv`.
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    pub folds: usize,
    pub output_dir: Option<PathBuf>,
    pub grid_count: usize,
    pub gamma: f64,
    pub stop_fraction: f64,
    pub max_iters: usize,
    pub tv_grid_count: usize,
    pub tv_grid_ratio: f64,
    pub tv_outer_iters: usize,
    pub tv_inner_iters: usize,
    pub tv_tol: f64,
    /// Adds a wall-clock column, which makes the table nondeterministic.
    pub include_runtime: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            signal: "spike".into(),
            image_path: None,
            p: 200,
            phantom_size: 64,
            n_segments: 5,
            segment_len: 10,
            amplitude: 3.0,
            n_breaks: 9,
            wave_amplitudes: vec![0.0, 3.0],
            design: "gaussian".into(),
            c0: 10.0,
            ratios: vec![0.3],
            sigmas: vec![1.0],
            methods: vec!["itale".into(), "tv".into()],
            seeds: vec![1],
            folds: 5,
            output_dir: None,
            grid_count: 300,
            gamma: 0.9,
            stop_fraction: 0.5,
            max_iters: 500,
            tv_grid_count: 30,
            tv_grid_ratio: 1e-4,
            tv_outer_iters: 500,
            tv_inner_iters: 50,
            tv_tol: 1e-6,
            include_runtime: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Itale,
    Tv,
}

impl Method {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "itale" => Ok(Method::Itale),
            "tv" => Ok(Method::Tv),
            other => Err(ItaleError::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Itale => "itale",
            Method::Tv => "tv",
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| ItaleError::Format {
            offset: e.span().map_or(0, |s| s.start),
            message: e.message().to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ItaleError::InvalidParameter(m));
        if self.ratios.is_empty() || self.ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return bad(format!("ratios must be nonempty and lie in (0, 1], got {:?}", self.ratios));
        }
        if self.sigmas.is_empty() || self.sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return bad(format!("sigmas must be nonempty and nonnegative, got {:?}", self.sigmas));
        }
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be >= 2, got {}", self.folds));
        }
        if self.methods.is_empty() {
            return bad("methods must be nonempty".into());
        }
        for m in &self.methods {
            Method::parse(m)?;
        }
        if self.design != "gaussian" && self.design != "fourier_weighted" {
            return bad(format!("unknown design {:?}", self.design));
        }
        if self.tv_grid_count == 0 || !(self.tv_grid_ratio > 0.0 && self.tv_grid_ratio < 1.0) {
            return bad("tv grid needs a positive count and a ratio in (0, 1)".into());
        }
        self.itale_config(1.0, None).validate()
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| Method::parse(m)).collect()
    }

    fn itale_config(&self, eta: f64, lambda_max: Option<f64>) -> ItaleConfig {
        ItaleConfig {
            gamma: self.gamma,
            lambda_max,
            eta,
            grid: GridRule::Count(self.grid_count),
            stop_fraction: self.stop_fraction,
            max_iters: self.max_iters,
            ..Default::default()
        }
    }

    fn tv_config(&self, grid: Vec<f64>) -> TvConfig {
        TvConfig {
            lambda_grid: grid,
            outer_iters: self.tv_outer_iters,
            inner_iters: self.tv_inner_iters,
            tol: self.tv_tol,
            step: None,
        }
    }

    /// Ground-truth signal, its graph, and lattice dimensions for images.
    pub fn truth(&self) -> Result<(Vec<f64>, GraphTopology, Option<(usize, usize)>)> {
        match self.signal.as_str() {
            "spike" => {
                let x = signals::make_spike_signal(self.p, self.n_segments, self.segment_len, self.amplitude)?;
                Ok((x, line_graph(self.p)?, None))
            }
            "wave" => {
                let x = signals::make_wave_signal(self.p, self.n_breaks, &self.wave_amplitudes)?;
                Ok((x, line_graph(self.p)?, None))
            }
            "image" => {
                let path = self
                    .image_path
                    .as_ref()
                    .ok_or_else(|| ItaleError::InvalidParameter("signal = \"image\" needs image_path".into()))?;
                let img = phantom::load_phantom(path)?;
                Ok((img.data.clone(), img.topology()?, Some((img.rows, img.cols))))
            }
            name => {
                let img = phantom::builtin_phantom(name, self.phantom_size)?;
                Ok((img.data.clone(), img.topology()?, Some((img.rows, img.cols))))
            }
        }
    }
}

fn stream(seed: u64, ratio_idx: usize, purpose: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((ratio_idx as u64) << 8) | purpose);
    rng
}

/// One simulated problem instance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub truth: Vec<f64>,
    pub topology: GraphTopology,
    pub operator: MeasurementOperator,
    pub y: Vec<f64>,
    /// Noise level the data were generated with.
    pub sigma: f64,
}

/// Draws the design for `ratios[ratio_idx]` and noisy measurements of the
/// truth. Noise enters before row normalization: `y = A x + scale · e` with
/// `e ~ N(0, σ²)` per real coordinate (real and imaginary parts separately for
/// Fourier rows).
pub fn build_dataset(spec: &ExperimentSpec, ratio_idx: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    let (truth, topology, dims) = spec.truth()?;
    let p = truth.len();
    let ratio = *spec
        .ratios
        .get(ratio_idx)
        .ok_or_else(|| ItaleError::InvalidParameter(format!("ratio index {ratio_idx} out of range")))?;
    let n = ((ratio * p as f64).round() as usize).max(1);
    if n < spec.folds {
        return Err(ItaleError::InvalidSize(format!("{n} measurements cannot fill {} folds", spec.folds)));
    }
    let mut design_rng = stream(seed, ratio_idx, STREAM_DESIGN);
    let operator = match spec.design.as_str() {
        "gaussian" => gaussian_design_from_rng(n, p, &mut design_rng)?,
        _ => {
            let (n1, n2) = dims.ok_or_else(|| {
                ItaleError::InvalidParameter("fourier_weighted designs need an image signal".into())
            })?;
            let law = SamplingLaw::new(n1, n2, spec.c0)?;
            let indices = law.sample(n, &mut design_rng);
            fourier_from_indices(&law, indices, Some(seed))?
        }
    };
    let mut y = operator.apply(&truth)?;
    let mut noise_rng = stream(seed, ratio_idx, STREAM_NOISE);
    for v in y.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut noise_rng);
        *v += operator.noise_scale * sigma * z;
    }
    Ok(Dataset { truth, topology, operator, y, sigma })
}

/// Fold index of every physical measurement: a seeded shuffle dealt out
/// round-robin, so fold sizes differ by at most one.
pub fn fold_assignment(n: usize, folds: usize, rng: &mut ChaCha20Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut fold = vec![0; n];
    for (pos, &r) in order.iter().enumerate() {
        fold[r] = pos % folds;
    }
    fold
}

/// Tuning outcome of one method on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Chosen path index.
    pub index: usize,
    /// Human-readable tuning value (`k=…` or `lambda=…`).
    pub parameter: String,
    pub cv_rmse: f64,
    pub best_rmse: f64,
    pub best_index: usize,
    /// RMSE of every candidate on the full-data path.
    pub path_rmse: Vec<f64>,
    /// Mean held-out prediction error per candidate.
    pub cv_error: Vec<f64>,
}

fn select(path_rmse: Vec<f64>, cv_error: Vec<f64>, param: impl Fn(usize) -> String) -> Selection {
    let argmin = |v: &[f64]| {
        v.iter().enumerate().fold(0, |best, (i, &e)| if e < v[best] { i } else { best })
    };
    let index = argmin(&cv_error);
    let best_index = argmin(&path_rmse);
    Selection {
        index,
        parameter: param(index),
        cv_rmse: path_rmse[index],
        best_rmse: path_rmse[best_index],
        best_index,
        path_rmse,
        cv_error,
    }
}

struct Fold {
    train_op: MeasurementOperator,
    train_y: Vec<f64>,
    test_op: MeasurementOperator,
    test_y: Vec<f64>,
}

fn make_folds(ds: &Dataset, folds: usize, rng: &mut ChaCha20Rng) -> Result<Vec<Fold>> {
    let n = ds.operator.measurement_count();
    let assign = fold_assignment(n, folds, rng);
    (0..folds)
        .map(|f| {
            let test: Vec<usize> = (0..n).filter(|&r| assign[r] == f).collect();
            let train: Vec<usize> = (0..n).filter(|&r| assign[r] != f).collect();
            Ok(Fold {
                train_op: ds.operator.select_measurements(&train)?,
                train_y: ds.operator.select_output(&ds.y, &train)?,
                test_op: ds.operator.select_measurements(&test)?,
                test_y: ds.operator.select_output(&ds.y, &test)?,
            })
        })
        .collect()
}

fn prediction_error(op: &MeasurementOperator, y: &[f64], x: &[f64]) -> Result<f64> {
    let ax = op.apply(x)?;
    Ok(ax.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum())
}

/// Runs the full-data path and one path per training fold (with `η` scaled by
/// `n / n_train` and the full-data `λ_max`), then picks the step minimizing
/// mean held-out prediction error over the steps all paths reached.
pub fn itale_cv(ds: &Dataset, spec: &ExperimentSpec, seed: u64, ratio_idx: usize) -> Result<Selection> {
    let cost = EdgeCost::L0Indicator;
    let full = run_itale(&ds.y, &ds.operator, &ds.topology, &cost, &spec.itale_config(1.0, None))?;
    let mut fold_rng = stream(seed, ratio_idx, STREAM_FOLDS);
    let folds = make_folds(ds, spec.folds, &mut fold_rng)?;
    let n = ds.operator.measurement_count() as f64;
    let mut errors: Vec<Vec<f64>> = Vec::with_capacity(folds.len());
    for fold in &folds {
        let eta = n / fold.train_op.measurement_count() as f64;
        let cfg = spec.itale_config(eta, Some(full.lambda_max));
        let path = run_itale(&fold.train_y, &fold.train_op, &ds.topology, &cost, &cfg)?;
        let errs = (0..path.len())
            .map(|k| prediction_error(&fold.test_op, &fold.test_y, &path.signal(k)))
            .collect::<Result<Vec<f64>>>()?;
        errors.push(errs);
    }
    let common = errors.iter().map(Vec::len).chain([full.len()]).min().unwrap_or(0);
    if common == 0 {
        return Err(ItaleError::InvalidParameter("a cross-validation path is empty".into()));
    }
    let cv_error: Vec<f64> =
        (0..common).map(|k| errors.iter().map(|e| e[k]).sum::<f64>() / errors.len() as f64).collect();
    let path_rmse: Vec<f64> = (0..full.len()).map(|k| crate::rmse(&full.signal(k), &ds.truth)).collect();
    let mut sel = select(path_rmse[..common].to_vec(), cv_error, |k| format!("k={k}"));
    // best-achieved ranges over the whole path, not just the common prefix
    let best_index = (0..path_rmse.len()).fold(0, |b, k| if path_rmse[k] < path_rmse[b] { k } else { b });
    sel.best_index = best_index;
    sel.best_rmse = path_rmse[best_index];
    sel.path_rmse = path_rmse;
    Ok(sel)
}

/// TV counterpart of [`itale_cv`]: fold penalties are the full-data grid
/// scaled by `n_train / n`.
pub fn tv_cv(ds: &Dataset, spec: &ExperimentSpec, seed: u64, ratio_idx: usize) -> Result<Selection> {
    let grid = default_lambda_grid(&ds.y, &ds.operator, &ds.topology, spec.tv_grid_count, spec.tv_grid_ratio)?;
    let full = solve_tv(&ds.y, &ds.operator, &ds.topology, &spec.tv_config(grid.clone()))?;
    let mut fold_rng = stream(seed, ratio_idx, STREAM_FOLDS);
    let folds = make_folds(ds, spec.folds, &mut fold_rng)?;
    let n = ds.operator.measurement_count() as f64;
    let mut cv_error = vec![0.0; grid.len()];
    for fold in &folds {
        let scale = fold.train_op.measurement_count() as f64 / n;
        let fold_grid: Vec<f64> = grid.iter().map(|l| l * scale).collect();
        let sols = solve_tv(&fold.train_y, &fold.train_op, &ds.topology, &spec.tv_config(fold_grid))?;
        for (j, sol) in sols.iter().enumerate() {
            cv_error[j] += prediction_error(&fold.test_op, &fold.test_y, &sol.x)? / folds.len() as f64;
        }
    }
    let path_rmse: Vec<f64> = full.iter().map(|s| crate::rmse(&s.x, &ds.truth)).collect();
    Ok(select(path_rmse, cv_error, |j| format!("lambda={:e}", grid[j])))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub signal: String,
    pub design: String,
    pub method: String,
    pub ratio: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Cross-validated tuning value; empty on failure.
    pub selected: String,
    /// RMSE at the cross-validated choice.
    pub rmse: f64,
    /// Smallest RMSE anywhere along the path.
    pub best_rmse: f64,
    pub runtime_secs: f64,
    /// `None` on success, else `kind: message`.
    pub error: Option<String>,
}

/// Runs every (ratio, sigma, seed, method) combination. Failures are recorded
/// in their row and do not stop the run.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let methods = spec.methods()?;
    let mut jobs = Vec::new();
    for ratio_idx in 0..spec.ratios.len() {
        for &sigma in &spec.sigmas {
            for &seed in &spec.seeds {
                jobs.push((ratio_idx, sigma, seed));
            }
        }
    }
    let rows: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(ratio_idx, sigma, seed)| {
            let data = build_dataset(spec, ratio_idx, sigma, seed);
            methods
                .iter()
                .map(|&method| {
                    let start = Instant::now();
                    let describe = |e: &ItaleError| format!("{}: {e}", e.kind());
                    let outcome = match &data {
                        Ok(ds) => match method {
                            Method::Itale => itale_cv(ds, spec, seed, ratio_idx),
                            Method::Tv => tv_cv(ds, spec, seed, ratio_idx),
                        }
                        .map_err(|e| describe(&e)),
                        Err(e) => Err(describe(e)),
                    };
                    let mut row = ResultRow {
                        signal: spec.signal.clone(),
                        design: spec.design.clone(),
                        method: method.as_str().into(),
                        ratio: spec.ratios[ratio_idx],
                        sigma,
                        seed,
                        selected: String::new(),
                        rmse: f64::NAN,
                        best_rmse: f64::NAN,
                        runtime_secs: start.elapsed().as_secs_f64(),
                        error: None,
                    };
                    match outcome {
                        Ok(sel) => {
                            row.selected = sel.parameter;
                            row.rmse = sel.cv_rmse;
                            row.best_rmse = sel.best_rmse;
                        }
                        Err(e) => {
                            log::warn!("{} seed {seed} sigma {sigma}: {e}", method.as_str());
                            row.error = Some(e);
                        }
                    }
                    row
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// CSV table of result rows; the runtime column is optional because it varies
/// between otherwise identical runs.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], include_runtime: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["signal", "design", "method", "ratio", "sigma", "seed", "selected", "rmse", "best_rmse"];
    if include_runtime {
        header.push("runtime_s");
    }
    header.push("status");
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.signal.clone(),
            r.design.clone(),
            r.method.clone(),
            r.ratio.to_string(),
            r.sigma.to_string(),
            r.seed.to_string(),
            r.selected.clone(),
            format!("{:e}", r.rmse),
            format!("{:e}", r.best_rmse),
        ];
        if include_runtime {
            rec.push(format!("{:.3}", r.runtime_secs));
        }
        rec.push(r.error.clone().map_or_else(|| "ok".to_string(), |e| format!("error: {e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

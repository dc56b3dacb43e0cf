//! The outer proximal loop.
//!
//! Starting from `x = 0` and `λ = λ_max`, each step forms the gradient point
//! `a = x − ηAᵀ(Ax − y)`, denoises it with alpha-expansion at penalty `λ`, and
//! shrinks `λ` by `γ`. The sequence of iterates is a regularization path; the
//! iterate produced at penalty `λ_k` approximately minimizes
//! `½‖y − Ax‖² + (λ_k/η) Σ c(x_i, x_j)`.

use crate::alpha_expansion::{alpha_expansion_from, EdgeCost, Expander, LabelGrid};
use crate::error::{check_len, ItaleError, Result};
use crate::graph::GraphTopology;
use crate::measurement::MeasurementOperator;
use std::io::Write;

/// How the label grid is chosen for each denoising step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridRule {
    /// This many evenly spaced labels spanning the range of the surrogate.
    Count(usize),
    /// Multiples of a fixed spacing inside the range of the surrogate.
    Spacing(f64),
}

impl GridRule {
    pub fn build(&self, a: &[f64]) -> Result<LabelGrid> {
        match *self {
            GridRule::Count(n) => LabelGrid::from_count(a, n),
            GridRule::Spacing(d) => LabelGrid::from_spacing(a, d),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItaleConfig {
    /// Penalty decay factor in (0, 1).
    pub gamma: f64,
    /// Initial penalty; `None` uses `‖ηAᵀy‖²`.
    pub lambda_max: Option<f64>,
    /// Stop once the penalty falls below this; 0 disables.
    pub lambda_min: f64,
    pub eta: f64,
    pub grid: GridRule,
    /// Stop once `‖∇x‖₀` exceeds this fraction of the edge count.
    pub stop_fraction: f64,
    pub max_iters: usize,
    /// Gradient/denoise repetitions per penalty value.
    pub inner_iters: usize,
    pub max_sweeps: usize,
    /// Store iterates as (partition, block values) instead of dense vectors.
    pub compact: bool,
}

impl Default for ItaleConfig {
    fn default() -> Self {
        ItaleConfig {
            gamma: 0.9,
            lambda_max: None,
            lambda_min: 0.0,
            eta: 1.0,
            grid: GridRule::Count(300),
            stop_fraction: 0.5,
            max_iters: 500,
            inner_iters: 1,
            max_sweeps: 10,
            compact: false,
        }
    }
}

impl ItaleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ItaleError::InvalidParameter(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.lambda_min >= 0.0) {
            return bad(format!("lambda_min must be >= 0, got {}", self.lambda_min));
        }
        if let Some(lm) = self.lambda_max {
            if !(lm > self.lambda_min) || !lm.is_finite() {
                return bad(format!("lambda_max {lm} must exceed lambda_min {}", self.lambda_min));
            }
        }
        if !(self.stop_fraction > 0.0 && self.stop_fraction <= 1.0) {
            return bad(format!("stop_fraction must lie in (0, 1], got {}", self.stop_fraction));
        }
        if self.max_iters == 0 || self.inner_iters == 0 || self.max_sweeps == 0 {
            return bad("max_iters, inner_iters and max_sweeps must be positive".into());
        }
        match self.grid {
            GridRule::Count(n) if n < 2 => bad(format!("grid count must be >= 2, got {n}")),
            GridRule::Spacing(d) if !(d > 0.0) => bad(format!("grid spacing must be positive, got {d}")),
            _ => Ok(()),
        }
    }
}

/// An iterate kept either densely or as block labels plus block values.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredSignal {
    Dense(Vec<f64>),
    Compact { labels: Vec<u32>, values: Vec<f64> },
}

impl StoredSignal {
    fn store(x: Vec<f64>, topology: &GraphTopology, compact: bool) -> Result<Self> {
        if !compact {
            return Ok(StoredSignal::Dense(x));
        }
        let part = topology.induced_partition(&x)?;
        let mut values = vec![0.0; part.blocks];
        for (v, &b) in part.labels.iter().enumerate() {
            values[b] = x[v];
        }
        Ok(StoredSignal::Compact { labels: part.labels.iter().map(|&b| b as u32).collect(), values })
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            StoredSignal::Dense(x) => x.clone(),
            StoredSignal::Compact { labels, values } => labels.iter().map(|&b| values[b as usize]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathIterate {
    /// Loop index `k`; the iterate was produced at penalty `λ_k`.
    pub step: usize,
    pub lambda: f64,
    pub signal: StoredSignal,
    /// `‖∇x‖₀`.
    pub support: usize,
    /// `‖y − Ax‖²`.
    pub residual: f64,
    /// `½‖y − Ax‖² + (λ_k/η) Σ c`.
    pub objective: f64,
    /// Grid the iterate's values were drawn from.
    pub grid: LabelGrid,
    pub denoise_converged: bool,
    pub denoise_monotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    LambdaFloor,
    SparsityStop,
    MaxIters,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::LambdaFloor => "lambda_floor",
            Termination::SparsityStop => "sparsity_stop",
            Termination::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationPath {
    pub iterates: Vec<PathIterate>,
    pub terminated: Termination,
    pub lambda_max: f64,
    pub gamma: f64,
    pub eta: f64,
    /// Run metadata worth surfacing (defaults chosen, design warnings).
    pub notes: Vec<String>,
}

impl RegularizationPath {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn signal(&self, idx: usize) -> Vec<f64> {
        self.iterates[idx].signal.to_dense()
    }

    /// CSV with header `k,lambda_k,s_k,residual,objective`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "lambda_k", "s_k", "residual", "objective"])?;
        for it in &self.iterates {
            w.write_record([
                it.step.to_string(),
                format!("{:e}", it.lambda),
                it.support.to_string(),
                format!("{:e}", it.residual),
                format!("{:e}", it.objective),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `x − η Aᵀ(Ax − y)`.
pub fn surrogate(x: &[f64], y: &[f64], a: &MeasurementOperator, eta: f64) -> Result<Vec<f64>> {
    check_len(a.output_len(), y.len())?;
    let mut r = a.apply(x)?;
    r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= yi);
    let g = a.adjoint(&r)?;
    Ok(x.iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect())
}

/// `½‖y − Ax‖² + λ Σ c(x_i, x_j)`.
pub fn objective_value(
    x: &[f64],
    y: &[f64],
    a: &MeasurementOperator,
    lambda: f64,
    cost: &EdgeCost,
    topology: &GraphTopology,
) -> Result<f64> {
    check_len(topology.num_vertices(), x.len())?;
    Ok(0.5 * residual_sq(x, y, a)? + lambda * cost.total(topology, x))
}

fn residual_sq(x: &[f64], y: &[f64], a: &MeasurementOperator) -> Result<f64> {
    check_len(a.output_len(), y.len())?;
    let ax = a.apply(x)?;
    Ok(ax.iter().zip(y).map(|(u, v)| (v - u) * (v - u)).sum())
}

/// `‖ηAᵀy‖²`, the default initial penalty.
pub fn default_lambda_max(y: &[f64], a: &MeasurementOperator, eta: f64) -> Result<f64> {
    let x0 = vec![0.0; a.signal_len()];
    Ok(crate::norm_sq(&surrogate(&x0, y, a, eta)?))
}

pub fn run_itale(
    y: &[f64],
    a: &MeasurementOperator,
    topology: &GraphTopology,
    cost: &EdgeCost,
    config: &ItaleConfig,
) -> Result<RegularizationPath> {
    config.validate()?;
    let p = topology.num_vertices();
    check_len(p, a.signal_len())?;
    check_len(a.output_len(), y.len())?;

    let mut notes = a.warnings.clone();
    let lambda_max = match config.lambda_max {
        Some(l) => l,
        None => {
            let l = default_lambda_max(y, a, config.eta)?;
            log::info!("lambda_max defaulted to |eta A^T y|^2 = {l:e}");
            notes.push(format!("lambda_max defaulted to {l:e}"));
            if !(l > config.lambda_min) {
                return Err(ItaleError::InvalidParameter(format!(
                    "default lambda_max {l} does not exceed lambda_min {}",
                    config.lambda_min
                )));
            }
            l
        }
    };

    let edge_limit = config.stop_fraction * topology.num_edges() as f64;
    let mut expander = Expander::new();
    let mut x = vec![0.0; p];
    let mut iterates = Vec::new();
    let mut step = 0usize;
    let terminated = loop {
        let lambda = lambda_max * config.gamma.powi(step as i32);
        if lambda < config.lambda_min {
            break Termination::LambdaFloor;
        }
        if iterates.len() >= config.max_iters {
            break Termination::MaxIters;
        }
        let mut grid = None;
        let mut converged = true;
        let mut monotone = true;
        for _ in 0..config.inner_iters {
            let a_next = surrogate(&x, y, a, config.eta)?;
            if a_next.iter().any(|v| !v.is_finite()) {
                return Err(ItaleError::NumericBlowup { iteration: step });
            }
            let g = config.grid.build(&a_next)?;
            let init = g.round(&a_next);
            let res = alpha_expansion_from(init, &a_next, lambda, &g, cost, topology, config.max_sweeps, &mut expander)?;
            converged &= res.converged;
            monotone &= res.is_monotone(1e-9);
            x = res.x;
            grid = Some(g);
        }
        let support = topology.gradient_support_size(&x)?;
        let residual = residual_sq(&x, y, a)?;
        let objective = 0.5 * residual + (lambda / config.eta) * cost.total(topology, &x);
        if !objective.is_finite() {
            return Err(ItaleError::NumericBlowup { iteration: step });
        }
        iterates.push(PathIterate {
            step,
            lambda,
            signal: StoredSignal::store(x.clone(), topology, config.compact)?,
            support,
            residual,
            objective,
            grid: grid.expect("inner_iters >= 1"),
            denoise_converged: converged,
            denoise_monotone: monotone,
        });
        if support as f64 > edge_limit {
            break Termination::SparsityStop;
        }
        step += 1;
    };
    Ok(RegularizationPath { iterates, terminated, lambda_max, gamma: config.gamma, eta: config.eta, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::line_graph;
    use crate::measurement::{gaussian_design, DenseMatrix};

    fn identity(p: usize) -> MeasurementOperator {
        let mut data = vec![0.0; p * p];
        for i in 0..p {
            data[i * p + i] = 1.0;
        }
        MeasurementOperator::dense(DenseMatrix::new(p, p, data).unwrap())
    }

    #[test]
    fn surrogate_identities() {
        let a = identity(4);
        let target = vec![1.0, 2.0, 2.0, 5.0];
        let s = surrogate(&[9.0, -1.0, 0.5, 3.0], &target, &a, 1.0).unwrap();
        assert_eq!(s, target);

        let g = gaussian_design(6, 4, 1).unwrap();
        let y = vec![0.3, -1.0, 2.0, 0.0, 0.7, 1.1];
        let s0 = surrogate(&[0.0; 4], &y, &g, 0.5).unwrap();
        let aty = g.adjoint(&y).unwrap();
        for (u, v) in s0.iter().zip(&aty) {
            assert!((u - 0.5 * v).abs() < 1e-15);
        }
        assert!(surrogate(&[0.0; 4], &[1.0], &g, 1.0).is_err());
    }

    #[test]
    fn objective_examples() {
        let topo = line_graph(5).unwrap();
        let g = gaussian_design(4, 5, 3).unwrap();
        let xs = vec![0.0, 0.0, 1.0, 1.0, 0.0];
        let y = g.apply(&xs).unwrap();
        let f = objective_value(&xs, &y, &g, 0.7, &EdgeCost::L0Indicator, &topo).unwrap();
        assert!((f - 0.7 * 2.0).abs() < 1e-12);
        let f0 = objective_value(&[0.0; 5], &y, &g, 0.7, &EdgeCost::L0Indicator, &topo).unwrap();
        assert!((f0 - 0.5 * crate::norm_sq(&y)).abs() < 1e-12);

        // scalar re-evaluation
        let x = vec![0.5, -1.0, -1.0, 2.0, 0.25];
        let crate::measurement::Backing::DenseReal(m) = &g.backing else { unreachable!() };
        let mut data = 0.0;
        for r in 0..4 {
            let mut ax = 0.0;
            for c in 0..5 {
                ax += m.data[r * 5 + c] * x[c];
            }
            data += (y[r] - ax) * (y[r] - ax);
        }
        let jumps = (0..4).filter(|&i| x[i] != x[i + 1]).count() as f64;
        let f = objective_value(&x, &y, &g, 0.3, &EdgeCost::L0Indicator, &topo).unwrap();
        assert!((f - (0.5 * data + 0.3 * jumps)).abs() < 1e-12);
    }

    #[test]
    fn lambda_schedule_is_geometric() {
        let topo = line_graph(10).unwrap();
        let a = identity(10);
        let y = vec![1.0; 10];
        let cfg = ItaleConfig { lambda_max: Some(1.0), max_iters: 3, grid: GridRule::Count(5), ..Default::default() };
        let path = run_itale(&y, &a, &topo, &EdgeCost::L0Indicator, &cfg).unwrap();
        let lambdas: Vec<f64> = path.iterates.iter().map(|i| i.lambda).collect();
        assert_eq!(lambdas.len(), 3);
        assert_eq!(lambdas[0], 1.0);
        assert!((lambdas[1] - 0.9).abs() < 1e-15);
        assert!((lambdas[2] - 0.81).abs() < 1e-15);
        assert_eq!(path.terminated, Termination::MaxIters);
    }

    #[test]
    fn constant_signal_recovered_with_identity() {
        let topo = line_graph(8).unwrap();
        let a = identity(8);
        let xs = vec![0.75; 8];
        let y = a.apply(&xs).unwrap();
        let cfg = ItaleConfig {
            lambda_max: Some(10.0),
            lambda_min: 1e-3,
            grid: GridRule::Spacing(0.25),
            ..Default::default()
        };
        let path = run_itale(&y, &a, &topo, &EdgeCost::L0Indicator, &cfg).unwrap();
        assert!(path.iterates.iter().any(|it| it.signal.to_dense() == xs));
        assert_eq!(path.terminated, Termination::LambdaFloor);
    }

    #[test]
    fn iterates_are_consistent() {
        let topo = line_graph(30).unwrap();
        let a = gaussian_design(20, 30, 2).unwrap();
        let xs: Vec<f64> = (0..30).map(|i| if (10..20).contains(&i) { 1.0 } else { 0.0 }).collect();
        let y = a.apply(&xs).unwrap();
        for compact in [false, true] {
            let cfg = ItaleConfig { grid: GridRule::Count(40), compact, max_iters: 40, ..Default::default() };
            let path = run_itale(&y, &a, &topo, &EdgeCost::L0Indicator, &cfg).unwrap();
            for (k, it) in path.iterates.iter().enumerate() {
                let x = it.signal.to_dense();
                assert_eq!(it.step, k);
                assert_eq!(it.lambda, path.lambda_max * 0.9f64.powi(k as i32));
                assert_eq!(it.support, topo.gradient_support_size(&x).unwrap());
                assert!(x.iter().all(|v| it.grid.contains(*v)));
                assert!(it.denoise_monotone);
            }
        }
    }

    #[test]
    fn diverging_step_is_reported() {
        let topo = line_graph(5).unwrap();
        let a = identity(5);
        let y = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let cfg = ItaleConfig { eta: 1e300, lambda_max: Some(1.0), grid: GridRule::Count(4), ..Default::default() };
        let err = run_itale(&y, &a, &topo, &EdgeCost::L0Indicator, &cfg).unwrap_err();
        assert!(matches!(err, ItaleError::NumericBlowup { .. }), "{err:?}");
    }

    #[test]
    fn invalid_configs() {
        let base = ItaleConfig::default();
        assert!(ItaleConfig { gamma: 1.0, ..base.clone() }.validate().is_err());
        assert!(ItaleConfig { eta: 0.0, ..base.clone() }.validate().is_err());
        assert!(ItaleConfig { lambda_max: Some(1.0), lambda_min: 2.0, ..base.clone() }.validate().is_err());
        assert!(ItaleConfig { stop_fraction: 0.0, ..base.clone() }.validate().is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn path_csv_has_header() {
        let topo = line_graph(6).unwrap();
        let a = identity(6);
        let cfg = ItaleConfig { lambda_max: Some(1.0), max_iters: 2, grid: GridRule::Count(4), ..Default::default() };
        let path = run_itale(&[0.0, 0.0, 1.0, 1.0, 0.0, 0.0], &a, &topo, &EdgeCost::L0Indicator, &cfg).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,lambda_k,s_k,residual,objective\n"));
        assert_eq!(text.lines().count(), 3);
    }
}

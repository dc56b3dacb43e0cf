//! Anisotropic total-variation comparator: minimizes
//! `½‖y − Ax‖² + λ‖∇x‖₁` by accelerated proximal gradient with adaptive
//! restart. The proximal map of `λ‖∇·‖₁` is computed on the dual,
//! `min_{|u|∞ ≤ λ} ½‖a − ∇ᵀu‖²`, by fast projected gradient.

use crate::error::{check_len, ItaleError, Result};
use crate::graph::GraphTopology;
use crate::measurement::MeasurementOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct TvConfig {
    /// Penalties, solved in the given (descending) order with warm starts.
    pub lambda_grid: Vec<f64>,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Relative objective decrease below which a solve stops.
    pub tol: f64,
    /// Gradient step; `None` uses `0.95 / ‖A‖²` from 20 power iterations.
    pub step: Option<f64>,
}

impl TvConfig {
    pub fn new(lambda_grid: Vec<f64>) -> Self {
        TvConfig { lambda_grid, outer_iters: 500, inner_iters: 50, tol: 1e-6, step: None }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ItaleError::InvalidParameter(m.to_string()));
        if self.lambda_grid.is_empty() {
            return bad("lambda grid is empty");
        }
        if self.lambda_grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return bad("lambda grid values must be positive");
        }
        if self.lambda_grid.windows(2).any(|w| w[1] > w[0]) {
            return bad("lambda grid must be sorted descending");
        }
        if self.outer_iters == 0 || self.inner_iters == 0 || !(self.tol > 0.0) {
            return bad("iteration caps and tolerance must be positive");
        }
        if let Some(s) = self.step {
            if !(s > 0.0) {
                return bad("step must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvSolution {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted outer iteration.
    pub trace: Vec<f64>,
}

/// Dual solver state for the TV proximal map; the dual is kept between calls
/// as a warm start.
#[derive(Debug, Clone)]
pub(crate) struct TvProx {
    p: usize,
    edges: Vec<(usize, usize)>,
    step: f64,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl TvProx {
    pub(crate) fn new(p: usize, edges: &[(usize, usize)]) -> Self {
        let mut degree = vec![0usize; p];
        for &(i, j) in edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        // ‖∇‖² is at most twice the largest degree
        let max_deg = degree.into_iter().max().unwrap_or(1).max(1);
        TvProx {
            p,
            edges: edges.to_vec(),
            step: 1.0 / (2.0 * max_deg as f64),
            u: vec![0.0; edges.len()],
            v: vec![0.0; edges.len()],
        }
    }

    fn primal(&self, a: &[f64], dual: &[f64], out: &mut [f64]) {
        out.copy_from_slice(a);
        for (&(i, j), &d) in self.edges.iter().zip(dual) {
            out[i] -= d;
            out[j] += d;
        }
    }

    /// Writes `argmin_x ½‖x − a‖² + λ‖∇x‖₁` (approximately) into `out`.
    pub(crate) fn solve(&mut self, a: &[f64], lambda: f64, iters: usize, out: &mut [f64]) {
        debug_assert_eq!(a.len(), self.p);
        if lambda == 0.0 {
            out.copy_from_slice(a);
            return;
        }
        for u in self.u.iter_mut() {
            *u = u.clamp(-lambda, lambda);
        }
        self.v.copy_from_slice(&self.u);
        let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut t = 1.0f64;
        for _ in 0..iters {
            self.primal(a, &self.v, out);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            let mut change = 0.0f64;
            for (e, &(i, j)) in self.edges.iter().enumerate() {
                let fresh = (self.v[e] + self.step * (out[i] - out[j])).clamp(-lambda, lambda);
                change = change.max((fresh - self.u[e]).abs());
                self.v[e] = fresh + momentum * (fresh - self.u[e]);
                self.u[e] = fresh;
            }
            t = t_next;
            if change <= 1e-14 * scale {
                break;
            }
        }
        self.primal(a, &self.u, out);
    }
}

/// Proximal map of `λ‖∇·‖₁`: approximately minimizes `½‖x − a‖² + λ‖∇x‖₁`.
pub fn tv_prox(a: &[f64], lambda: f64, topology: &GraphTopology, inner_iters: usize) -> Result<Vec<f64>> {
    check_len(topology.num_vertices(), a.len())?;
    tv_prox_on_edges(a, lambda, topology.edges(), inner_iters)
}

/// [`tv_prox`] on an arbitrary edge list over `a.len()` vertices; the graph
/// need not be connected.
pub fn tv_prox_on_edges(a: &[f64], lambda: f64, edges: &[(usize, usize)], inner_iters: usize) -> Result<Vec<f64>> {
    if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| i >= a.len() || j >= a.len() || i == j) {
        return Err(ItaleError::InvalidGraph(format!("edge ({i}, {j}) is invalid for {} vertices", a.len())));
    }
    if !(lambda >= 0.0) {
        return Err(ItaleError::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut prox = TvProx::new(a.len(), edges);
    let mut out = vec![0.0; a.len()];
    prox.solve(a, lambda, inner_iters, &mut out);
    Ok(out)
}

/// `½‖y − Ax‖² + λ‖∇x‖₁`.
pub fn tv_objective(x: &[f64], y: &[f64], a: &MeasurementOperator, lambda: f64, topology: &GraphTopology) -> Result<f64> {
    let ax = a.apply(x)?;
    check_len(ax.len(), y.len())?;
    let data: f64 = ax.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum();
    Ok(0.5 * data + lambda * topology.total_variation(x)?)
}

/// `count` log-spaced penalties from `λ_top` down to `λ_top · ratio`, where
/// `λ_top = ‖∇Aᵀy‖_∞`.
pub fn default_lambda_grid(
    y: &[f64],
    a: &MeasurementOperator,
    topology: &GraphTopology,
    count: usize,
    ratio: f64,
) -> Result<Vec<f64>> {
    let aty = a.adjoint(y)?;
    let top = topology.gradient(&aty)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let top = if top > 0.0 { top } else { 1.0 };
    if count == 1 {
        return Ok(vec![top]);
    }
    let (hi, lo) = (top.ln(), (top * ratio).ln());
    Ok((0..count).map(|k| (hi + (lo - hi) * k as f64 / (count - 1) as f64).exp()).collect())
}

pub fn solve_tv(
    y: &[f64],
    a: &MeasurementOperator,
    topology: &GraphTopology,
    config: &TvConfig,
) -> Result<Vec<TvSolution>> {
    config.validate()?;
    let p = topology.num_vertices();
    check_len(p, a.signal_len())?;
    check_len(a.output_len(), y.len())?;
    let step = match config.step {
        Some(s) => s,
        None => {
            let l = a.operator_norm_sq(20)?;
            if l > 0.0 {
                0.95 / l
            } else {
                1.0
            }
        }
    };
    let mut prox = TvProx::new(p, topology.edges());
    let data = |ax: &[f64]| -> f64 { 0.5 * ax.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>() };

    let mut x = vec![0.0; p];
    let mut ax = a.apply(&x)?;
    let mut out = Vec::with_capacity(config.lambda_grid.len());
    let mut point = vec![0.0; p];
    let mut cand = vec![0.0; p];
    for &lambda in &config.lambda_grid {
        let mut f = data(&ax) + lambda * topology.total_variation(&x)?;
        let mut z = x.clone();
        let mut az = ax.clone();
        let mut t = 1.0f64;
        let mut at_restart = true;
        let mut converged = false;
        let mut iterations = 0;
        let mut trace = vec![f];
        while iterations < config.outer_iters {
            iterations += 1;
            let resid: Vec<f64> = az.iter().zip(y).map(|(u, v)| u - v).collect();
            let grad = a.adjoint(&resid)?;
            for i in 0..p {
                point[i] = z[i] - step * grad[i];
            }
            prox.solve(&point, step * lambda, config.inner_iters, &mut cand);
            let acand = a.apply(&cand)?;
            let fc = data(&acand) + lambda * topology.total_variation(&cand)?;
            if !fc.is_finite() {
                return Err(ItaleError::NumericBlowup { iteration: iterations });
            }
            if fc > f {
                if at_restart {
                    // a plain proximal step no longer decreases the objective
                    converged = true;
                    break;
                }
                z.copy_from_slice(&x);
                az.copy_from_slice(&ax);
                t = 1.0;
                at_restart = true;
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for i in 0..p {
                z[i] = cand[i] + beta * (cand[i] - x[i]);
            }
            for k in 0..az.len() {
                az[k] = acand[k] + beta * (acand[k] - ax[k]);
            }
            x.copy_from_slice(&cand);
            ax = acand;
            t = t_next;
            at_restart = false;
            let decrease = f - fc;
            f = fc;
            trace.push(f);
            if decrease <= config.tol * f.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        out.push(TvSolution { lambda, x: x.clone(), objective: f, iterations, converged, trace });
    }
    Ok(out)
}

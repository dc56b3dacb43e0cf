//! Approximate minimization of `½‖x − a‖² + λ Σ_{(i,j)∈E} c(x_i, x_j)` over a
//! finite label grid by alpha-expansion moves.
//!
//! Each move picks a label `z` and lets every vertex either keep its value or
//! switch to `z`; the best such move is an exact minimum s-t cut on an
//! augmented graph (one auxiliary node per edge whose endpoints disagree). For
//! metric costs a labeling with no improving move is within a factor of two
//! of the optimum in the penalty term.

use crate::error::{check_len, ItaleError, Result};
use crate::graph::GraphTopology;
use crate::maxflow::MaxFlow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

type CostFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Pairwise edge cost `c(x, y)`.
#[derive(Clone)]
pub enum EdgeCost {
    /// `1{x ≠ y}`; its sum over edges is `‖∇x‖₀`.
    L0Indicator,
    /// A user-supplied metric.
    CustomMetric(Arc<CostFn>),
}

impl fmt::Debug for EdgeCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeCost::L0Indicator => write!(f, "L0Indicator"),
            EdgeCost::CustomMetric(_) => write!(f, "CustomMetric(..)"),
        }
    }
}

impl Default for EdgeCost {
    fn default() -> Self {
        EdgeCost::L0Indicator
    }
}

impl EdgeCost {
    /// Wraps `cost` after spot-checking symmetry, identity and the triangle
    /// inequality on random points.
    pub fn custom<F>(cost: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c057);
        let tol = 1e-12;
        for _ in 0..256 {
            let x: f64 = rng.random_range(-10.0..10.0);
            let y: f64 = rng.random_range(-10.0..10.0);
            let z: f64 = rng.random_range(-10.0..10.0);
            let (cxy, cyx, cxx) = (cost(x, y), cost(y, x), cost(x, x));
            if !(cxy >= 0.0) || (cxy - cyx).abs() > tol * (1.0 + cxy.abs()) {
                return Err(ItaleError::InvalidParameter(format!("cost is not symmetric/nonnegative at ({x}, {y})")));
            }
            if cxx != 0.0 || (x != y && cxy <= 0.0) {
                return Err(ItaleError::InvalidParameter(format!("cost violates identity at ({x}, {y})")));
            }
            if cost(x, z) > cxy + cost(y, z) + tol * (1.0 + cxy.abs()) {
                return Err(ItaleError::InvalidParameter(format!(
                    "cost violates the triangle inequality at ({x}, {y}, {z})"
                )));
            }
        }
        Ok(EdgeCost::CustomMetric(Arc::new(cost)))
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            EdgeCost::L0Indicator => {
                if x != y {
                    1.0
                } else {
                    0.0
                }
            }
            EdgeCost::CustomMetric(c) => c(x, y),
        }
    }

    /// `Σ_{(i,j)∈E} c(x_i, x_j)`.
    pub fn total(&self, topology: &GraphTopology, x: &[f64]) -> f64 {
        topology.edges().iter().map(|&(i, j)| self.eval(x[i], x[j])).sum()
    }
}

/// Sorted, evenly spaced candidate values.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    pub delta: f64,
    pub lo: f64,
    pub hi: f64,
    pub labels: Vec<f64>,
}

fn range_of(a: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() {
        return Err(ItaleError::InvalidParameter("cannot build a label grid from an empty signal".into()));
    }
    let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(ItaleError::InvalidParameter("signal has non-finite entries".into()));
    }
    Ok((lo, hi))
}

impl LabelGrid {
    /// Exactly `count` values from `min(a)` to `max(a)`; a single value when `a`
    /// is constant.
    pub fn from_count(a: &[f64], count: usize) -> Result<Self> {
        let (lo, hi) = range_of(a)?;
        if lo == hi {
            return Ok(LabelGrid { delta: 1.0, lo, hi, labels: vec![lo] });
        }
        if count < 2 {
            return Err(ItaleError::InvalidParameter(format!("grid_count must be >= 2, got {count}")));
        }
        let delta = (hi - lo) / (count - 1) as f64;
        let mut labels: Vec<f64> = (0..count).map(|k| lo + k as f64 * delta).collect();
        labels[count - 1] = hi;
        Ok(LabelGrid { delta, lo, hi, labels })
    }

    /// The multiples of `delta` inside `[min(a), max(a)]`. When the range holds
    /// no multiple, the multiple nearest its midpoint.
    pub fn from_spacing(a: &[f64], delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(ItaleError::InvalidParameter(format!("grid spacing must be positive, got {delta}")));
        }
        let (lo, hi) = range_of(a)?;
        let first = (lo / delta).ceil() as i64;
        let last = (hi / delta).floor() as i64;
        let labels: Vec<f64> = if first <= last {
            (first..=last).map(|k| k as f64 * delta).collect()
        } else {
            vec![(0.5 * (lo + hi) / delta).round() * delta]
        };
        Ok(LabelGrid { delta, lo, hi, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, z: f64) -> bool {
        self.labels.binary_search_by(|l| l.total_cmp(&z)).is_ok()
    }

    /// Nearest label to `v`; exact ties go to the larger label.
    pub fn nearest(&self, v: f64) -> f64 {
        let idx = self.labels.partition_point(|&l| l < v);
        if idx == 0 {
            return self.labels[0];
        }
        if idx == self.labels.len() {
            return self.labels[idx - 1];
        }
        let (below, above) = (self.labels[idx - 1], self.labels[idx]);
        if v - below < above - v {
            below
        } else {
            above
        }
    }

    pub fn round(&self, a: &[f64]) -> Vec<f64> {
        a.iter().map(|&v| self.nearest(v)).collect()
    }
}

/// Builds the per-iteration grid of `count` labels spanning the range of `a`.
pub fn build_label_grid(a: &[f64], grid_count: usize) -> Result<LabelGrid> {
    LabelGrid::from_count(a, grid_count)
}

/// `½‖x − a‖² + λ Σ c(x_i, x_j)`.
pub fn denoise_objective(x: &[f64], a: &[f64], lambda: f64, cost: &EdgeCost, topology: &GraphTopology) -> f64 {
    let data: f64 = x.iter().zip(a).map(|(xi, ai)| 0.5 * (xi - ai) * (xi - ai)).sum();
    data + lambda * cost.total(topology, x)
}

/// Energy before a move and the energy of the best move the cut found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveRecord {
    pub label: f64,
    pub before: f64,
    pub proposed: f64,
}

#[derive(Debug, Clone)]
pub struct DenoiseResult {
    /// Minimizer found, every entry a grid label.
    pub x: Vec<f64>,
    /// `½‖x − a‖² + λ Σ c` at `x`.
    pub objective: f64,
    /// Full label passes performed.
    pub sweeps: usize,
    /// Whether the last sweep made no change.
    pub converged: bool,
    /// One record per attempted move, in order.
    pub moves: Vec<MoveRecord>,
}

impl DenoiseResult {
    /// Whether no proposed move had higher energy than its starting point,
    /// to `rel_tol` relative slack.
    pub fn is_monotone(&self, rel_tol: f64) -> bool {
        self.moves.iter().all(|m| m.proposed <= m.before + rel_tol * m.before.abs().max(1e-300))
            && self.moves.windows(2).all(|w| w[1].before <= w[0].before)
    }
}

/// Reusable state for expansion moves on one topology.
#[derive(Debug, Default)]
pub struct Expander {
    flow: MaxFlow,
    proposal: Vec<f64>,
}

impl Expander {
    pub fn new() -> Self {
        Self::default()
    }

    /// Best expansion of `x` toward `z`, written into an internal buffer.
    fn propose(
        &mut self,
        x: &[f64],
        a: &[f64],
        z: f64,
        lambda: f64,
        cost: &EdgeCost,
        topology: &GraphTopology,
    ) -> &[f64] {
        let p = x.len();
        let (s, t) = (p, p + 1);

        let mut finite = 0.0;
        for i in 0..p {
            finite += 0.5 * (a[i] - z) * (a[i] - z);
            if x[i] != z {
                finite += 0.5 * (a[i] - x[i]) * (a[i] - x[i]);
            }
        }
        for &(i, j) in topology.edges() {
            if x[i] == x[j] {
                finite += lambda * cost.eval(x[i], z);
            } else {
                finite += lambda * (cost.eval(x[i], z) + cost.eval(x[j], z) + cost.eval(x[i], x[j]));
            }
        }
        let infinite = 1.0 + finite;

        self.flow.reset(p + 2, s, t);
        for i in 0..p {
            let to_z = 0.5 * (a[i] - z) * (a[i] - z);
            let keep = if x[i] == z { infinite } else { 0.5 * (a[i] - x[i]) * (a[i] - x[i]) };
            self.flow.add_terminal(i, to_z, keep);
        }
        for &(i, j) in topology.edges() {
            if x[i] == x[j] {
                let w = lambda * cost.eval(x[i], z);
                if w > 0.0 {
                    self.flow.add_edge(i, j, w, w);
                }
            } else {
                let v = self.flow.add_node();
                let wi = lambda * cost.eval(x[i], z);
                let wj = lambda * cost.eval(x[j], z);
                let wij = lambda * cost.eval(x[i], x[j]);
                if wi > 0.0 {
                    self.flow.add_edge(i, v, wi, wi);
                }
                if wj > 0.0 {
                    self.flow.add_edge(j, v, wj, wj);
                }
                if wij > 0.0 {
                    self.flow.add_arc(v, t, wij);
                }
            }
        }
        self.flow.solve();
        let side = self.flow.source_side();
        self.proposal.clear();
        self.proposal.extend((0..p).map(|i| if side[i] { x[i] } else { z }));
        &self.proposal
    }
}

fn check_inputs(x: &[f64], a: &[f64], lambda: f64, topology: &GraphTopology) -> Result<()> {
    check_len(topology.num_vertices(), a.len())?;
    check_len(topology.num_vertices(), x.len())?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(ItaleError::InvalidParameter(format!("penalty must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// One expansion move toward label `z`. Returns the optimal moved signal
/// (which may equal `x`).
pub fn expansion_move(
    x: &[f64],
    a: &[f64],
    z: f64,
    lambda: f64,
    cost: &EdgeCost,
    topology: &GraphTopology,
    grid: &LabelGrid,
) -> Result<Vec<f64>> {
    check_inputs(x, a, lambda, topology)?;
    if !grid.contains(z) {
        return Err(ItaleError::InvalidLabel(z));
    }
    if let Some(&bad) = x.iter().find(|v| !grid.contains(**v)) {
        return Err(ItaleError::InvalidLabel(bad));
    }
    let mut ex = Expander::new();
    Ok(ex.propose(x, a, z, lambda, cost, topology).to_vec())
}

/// Alpha-expansion started from `a` rounded to the grid.
pub fn alpha_expansion(
    a: &[f64],
    lambda: f64,
    grid: &LabelGrid,
    cost: &EdgeCost,
    topology: &GraphTopology,
    max_sweeps: usize,
) -> Result<DenoiseResult> {
    let init = grid.round(a);
    alpha_expansion_from(init, a, lambda, grid, cost, topology, max_sweeps, &mut Expander::new())
}

/// Alpha-expansion from an explicit grid-valued starting point.
///
/// Labels are visited in ascending order. A move is kept only if it strictly
/// lowers the energy, so equal-energy relabelings never cycle.
#[allow(clippy::too_many_arguments)]
pub fn alpha_expansion_from(
    init: Vec<f64>,
    a: &[f64],
    lambda: f64,
    grid: &LabelGrid,
    cost: &EdgeCost,
    topology: &GraphTopology,
    max_sweeps: usize,
    expander: &mut Expander,
) -> Result<DenoiseResult> {
    check_inputs(&init, a, lambda, topology)?;
    if let Some(&bad) = init.iter().find(|v| !grid.contains(**v)) {
        return Err(ItaleError::InvalidLabel(bad));
    }
    let mut x = init;
    let mut energy = denoise_objective(&x, a, lambda, cost, topology);
    let mut moves = Vec::with_capacity(grid.len() * 2);
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for &z in &grid.labels {
            let proposal = expander.propose(&x, a, z, lambda, cost, topology);
            let proposed = denoise_objective(proposal, a, lambda, cost, topology);
            moves.push(MoveRecord { label: z, before: energy, proposed });
            if proposed < energy {
                x.copy_from_slice(proposal);
                energy = proposed;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("alpha-expansion stopped after {sweeps} sweeps without converging");
    }
    Ok(DenoiseResult { x, objective: energy, sweeps, converged, moves })
}

//! Monte-Carlo probing of the cut-restricted isometry of a design.
//!
//! Sampling can only falsify an isometry constant, never confirm one: a
//! report lists the extreme ratios `‖Ax‖/‖x‖` seen over random
//! gradient-sparse signals, and the smallest `ρ` consistent with them.

use crate::error::{check_len, ItaleError, Result};
use crate::graph::GraphTopology;
use crate::measurement::MeasurementOperator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::io::Write;

/// Region shape used by the partition sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionShape {
    /// Regions grow from random frontier vertices into compact blobs.
    Balanced,
    /// Regions grow from their newest vertex into thin strands.
    Sliver,
}

/// Random unit-norm signal whose gradient support is at most `s`, drawn with a
/// ChaCha20 stream seeded by `seed`. The shape alternates with the seed parity.
pub fn sample_gradient_sparse(topology: &GraphTopology, s: usize, seed: u64) -> Result<Vec<f64>> {
    let shape = if seed % 2 == 0 { RegionShape::Balanced } else { RegionShape::Sliver };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    sample_with_shape(topology, s, shape, &mut rng)
}

pub fn sample_with_shape<R: Rng + ?Sized>(
    topology: &GraphTopology,
    s: usize,
    shape: RegionShape,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let labels = sample_partition(topology, s, shape, rng)?;
    let regions = labels.iter().max().map_or(0, |m| m + 1);
    let values: Vec<f64> = (0..regions).map(|_| StandardNormal.sample(rng)).collect();
    let mut x: Vec<f64> = labels.iter().map(|&l| values[l]).collect();
    let norm = crate::norm_sq(&x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    } else {
        let c = 1.0 / (x.len() as f64).sqrt();
        x.iter_mut().for_each(|v| *v = c);
    }
    Ok(x)
}

/// Region labels with at most `s` edges joining different labels.
fn sample_partition<R: Rng + ?Sized>(
    topology: &GraphTopology,
    s: usize,
    shape: RegionShape,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let (p, m) = (topology.num_vertices(), topology.num_edges());
    if s == 0 || s > m {
        return Err(ItaleError::InvalidParameter(format!("sparsity {s} outside 1..={m}")));
    }
    let mut labels = vec![0usize; p];
    let mut boundary = 0usize;
    let mut next_label = 1usize;
    // change in boundary size if v were relabeled to `to`
    let delta = |labels: &[usize], v: usize, to: usize| -> isize {
        let from = labels[v];
        topology
            .neighbors(v)
            .iter()
            .map(|&(u, _)| (labels[u] != to) as isize - (labels[u] != from) as isize)
            .sum()
    };
    let cap = (p / 2).max(1);
    let mut region: Vec<usize> = Vec::new();
    let mut current = 0usize;
    let mut stuck = 0usize;
    let budget = 40 * p + 200 * s;
    for _ in 0..budget {
        if boundary == s {
            break;
        }
        if region.is_empty() || region.len() >= cap || stuck >= 8 {
            let v = rng.random_range(0..p);
            let d = delta(&labels, v, next_label);
            if (boundary as isize + d) as usize <= s {
                current = next_label;
                next_label += 1;
                labels[v] = current;
                boundary = (boundary as isize + d) as usize;
                region.clear();
                region.push(v);
                stuck = 0;
            }
            continue;
        }
        let anchor = match shape {
            RegionShape::Balanced => region[rng.random_range(0..region.len())],
            RegionShape::Sliver => *region.last().unwrap(),
        };
        let nbrs = topology.neighbors(anchor);
        let (v, _) = nbrs[rng.random_range(0..nbrs.len())];
        if labels[v] == current {
            stuck += 1;
            continue;
        }
        let d = delta(&labels, v, current);
        if boundary as isize + d >= 0 && ((boundary as isize + d) as usize) <= s {
            labels[v] = current;
            boundary = (boundary as isize + d) as usize;
            region.push(v);
            stuck = 0;
        } else {
            stuck += 1;
        }
    }
    // compact label ids in order of first appearance
    let mut remap = vec![usize::MAX; next_label];
    let mut count = 0;
    for l in labels.iter_mut() {
        if remap[*l] == usize::MAX {
            remap[*l] = count;
            count += 1;
        }
        *l = remap[*l];
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CripRecord {
    pub s: usize,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Smallest `ρ` reconciling the sampled ratios with `κ = 0`:
    /// `(max |ratio − 1|)²`.
    pub rho_hat: f64,
    /// `ρ̂ · n / (s · ln(1 + |E|/s))`.
    pub constant_fit: f64,
}

impl CripRecord {
    /// Whether some sampled ratio lies outside `[1 − κ − √ρ, 1 + κ + √ρ]`.
    pub fn falsifies(&self, kappa: f64, rho: f64) -> bool {
        let slack = kappa + rho.max(0.0).sqrt();
        self.min_ratio < 1.0 - slack || self.max_ratio > 1.0 + slack
    }

    /// No lower isometry bound with `κ = 0` and `ρ < 1` survives the samples.
    pub fn falsified(&self) -> bool {
        self.rho_hat >= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CripReport {
    pub records: Vec<CripRecord>,
    pub measurements: usize,
    pub signal_len: usize,
    pub num_edges: usize,
    pub seed: u64,
}

impl CripReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "n_samples", "min_ratio", "max_ratio", "rho_hat"])?;
        for r in &self.records {
            w.write_record([
                r.s.to_string(),
                r.samples.to_string(),
                format!("{:e}", r.min_ratio),
                format!("{:e}", r.max_ratio),
                format!("{:e}", r.rho_hat),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sample_seed(seed: u64, s: usize, j: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((s as u64) << 32) ^ j as u64);
    rng
}

pub fn probe_crip(
    a: &MeasurementOperator,
    topology: &GraphTopology,
    s_list: &[usize],
    samples_per_s: usize,
    seed: u64,
) -> Result<CripReport> {
    check_len(topology.num_vertices(), a.signal_len())?;
    if samples_per_s == 0 {
        return Err(ItaleError::InvalidParameter("samples per sparsity must be positive".into()));
    }
    if s_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ItaleError::InvalidParameter("sparsity levels must be strictly increasing".into()));
    }
    let m = topology.num_edges();
    let n = a.output_len() as f64;
    let mut records = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let ratios = (0..samples_per_s)
            .into_par_iter()
            .map(|j| {
                let mut rng = sample_seed(seed, s, j);
                let shape = if j % 2 == 0 { RegionShape::Balanced } else { RegionShape::Sliver };
                let x = sample_with_shape(topology, s, shape, &mut rng)?;
                Ok(crate::norm_sq(&a.apply(&x)?).sqrt() / crate::norm_sq(&x).sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dev = (1.0 - min_ratio).abs().max((max_ratio - 1.0).abs());
        let rho_hat = dev * dev;
        let constant_fit = rho_hat * n / (s as f64 * (1.0 + m as f64 / s as f64).ln());
        records.push(CripRecord { s, samples: samples_per_s, min_ratio, max_ratio, rho_hat, constant_fit });
    }
    Ok(CripReport { records, measurements: a.output_len(), signal_len: a.signal_len(), num_edges: m, seed })
}

/// Right-hand side `(1 + κ + √(Dρ)) (‖u‖₂ + ‖u‖₁/√s)` of the mixed-norm bound.
pub fn norm_bound_rhs(u: &[f64], s: usize, kappa: f64, rho: f64, max_degree: usize) -> f64 {
    let l2 = crate::norm_sq(u).sqrt();
    let l1: f64 = u.iter().map(|v| v.abs()).sum();
    (1.0 + kappa + (max_degree as f64 * rho).sqrt()) * (l2 + l1 / (s as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormBoundReport {
    pub s: usize,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed `‖Au‖₂ / rhs`.
    pub worst_ratio: f64,
}

impl NormBoundReport {
    pub fn violation_fraction(&self) -> f64 {
        self.violations as f64 / self.samples as f64
    }
}

/// Checks `‖Au‖₂ ≤ (1 + κ + √(Dρ)) (‖u‖₂ + ‖u‖₁/√s)` on random Gaussian `u`,
/// with `D` the maximum vertex degree.
pub fn l1_l2_norm_bound_check(
    a: &MeasurementOperator,
    topology: &GraphTopology,
    s: usize,
    kappa: f64,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<NormBoundReport> {
    let p = topology.num_vertices();
    check_len(p, a.signal_len())?;
    if s == 0 || samples == 0 {
        return Err(ItaleError::InvalidParameter("sparsity and sample count must be positive".into()));
    }
    let d = topology.max_degree();
    let ratios = (0..samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = sample_seed(seed, s, j);
            let u: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
            Ok(crate::norm_sq(&a.apply(&u)?).sqrt() / norm_bound_rhs(&u, s, kappa, rho, d))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(NormBoundReport {
        s,
        samples,
        violations: ratios.iter().filter(|&&r| r > 1.0).count(),
        worst_ratio: ratios.iter().copied().fold(0.0, f64::max),
    })
}

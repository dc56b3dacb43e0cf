//! Randomly sampled, reweighted 2-D Fourier rows.
//!
//! Row `(i, j)` of the unitary 2-D DFT on an `n1 × n2` lattice, with entries
//! `exp(+2πi (i k / n1 + j l / n2)) / √p` against pixel `(k, l)` stored at
//! `k * n2 + l`, is sampled from `ν = ν₁ × ν₂` and rescaled by
//! `1 / √(n · ν(i, j))`. Indices are zero-based throughout.

use crate::error::{ItaleError, Result};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Low-frequency-biased sampling law over lattice frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingLaw {
    pub n1: usize,
    pub n2: usize,
    pub c0: f64,
    pub nu1: Vec<f64>,
    pub nu2: Vec<f64>,
}

fn axis_mass(len: usize, c0: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|k| 1.0 / (c0 + k.min(len - k) as f64)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

impl SamplingLaw {
    /// `ν₁(k) ∝ 1 / (c0 + min(k, n1 − k))` for zero-based `k`, likewise `ν₂`.
    pub fn new(n1: usize, n2: usize, c0: f64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(ItaleError::InvalidSize(format!("lattice {n1}x{n2} is empty")));
        }
        if !(c0 >= 1.0) || !c0.is_finite() {
            return Err(ItaleError::InvalidParameter(format!("c0 must be >= 1, got {c0}")));
        }
        Ok(SamplingLaw { n1, n2, c0, nu1: axis_mass(n1, c0), nu2: axis_mass(n2, c0) })
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.nu1[i] * self.nu2[j]
    }

    /// `n` i.i.d. frequency pairs.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(usize, usize)> {
        let rows = WeightedIndex::new(&self.nu1).expect("masses are positive");
        let cols = WeightedIndex::new(&self.nu2).expect("masses are positive");
        (0..n).map(|_| (rows.sample(rng), cols.sample(rng))).collect()
    }
}

#[derive(Clone)]
pub(crate) struct Plans {
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n1: usize, n2: usize) -> Self {
        let mut planner = FftPlanner::new();
        Plans {
            row_fwd: planner.plan_fft_forward(n2),
            row_inv: planner.plan_fft_inverse(n2),
            col_fwd: planner.plan_fft_forward(n1),
            col_inv: planner.plan_fft_inverse(n1),
        }
    }
}

/// Operator backing for a sampled Fourier design.
#[derive(Clone)]
pub struct FourierDesign {
    pub n1: usize,
    pub n2: usize,
    pub c0: f64,
    pub seed: Option<u64>,
    /// Sampled `(row frequency, column frequency)` pairs.
    pub indices: Vec<(usize, usize)>,
    /// `1 / √ν(i, j)` per sampled pair.
    pub weights: Vec<f64>,
    /// Global factor, `1 / √n` for the number `n` of originally drawn rows.
    pub scale: f64,
    plans: Plans,
}

impl fmt::Debug for FourierDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierDesign")
            .field("n1", &self.n1)
            .field("n2", &self.n2)
            .field("c0", &self.c0)
            .field("seed", &self.seed)
            .field("rows", &self.indices.len())
            .field("scale", &self.scale)
            .finish()
    }
}

impl PartialEq for FourierDesign {
    fn eq(&self, other: &Self) -> bool {
        self.n1 == other.n1
            && self.n2 == other.n2
            && self.c0 == other.c0
            && self.indices == other.indices
            && self.weights == other.weights
            && self.scale == other.scale
    }
}

impl FourierDesign {
    pub(crate) fn new(law: &SamplingLaw, indices: Vec<(usize, usize)>, scale: f64, seed: Option<u64>) -> Result<Self> {
        if let Some(&(i, j)) = indices.iter().find(|&&(i, j)| i >= law.n1 || j >= law.n2) {
            return Err(ItaleError::InvalidParameter(format!(
                "frequency ({i}, {j}) outside {}x{} lattice",
                law.n1, law.n2
            )));
        }
        let weights = indices.iter().map(|&(i, j)| 1.0 / law.mass(i, j).sqrt()).collect();
        Ok(FourierDesign {
            n1: law.n1,
            n2: law.n2,
            c0: law.c0,
            seed,
            indices,
            weights,
            scale,
            plans: Plans::new(law.n1, law.n2),
        })
    }

    pub fn rows(&self) -> usize {
        self.indices.len()
    }

    pub fn signal_len(&self) -> usize {
        self.n1 * self.n2
    }

    pub(crate) fn subset(&self, keep: &[usize]) -> Self {
        let mut out = self.clone();
        out.indices = keep.iter().map(|&r| self.indices[r]).collect();
        out.weights = keep.iter().map(|&r| self.weights[r]).collect();
        out
    }

    fn transform(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let (n1, n2) = (self.n1, self.n2);
        let (row, col) = if inverse {
            (&self.plans.row_inv, &self.plans.col_inv)
        } else {
            (&self.plans.row_fwd, &self.plans.col_fwd)
        };
        for r in 0..n1 {
            row.process(&mut buf[r * n2..(r + 1) * n2]);
        }
        let mut column = vec![Complex::new(0.0, 0.0); n1];
        for c in 0..n2 {
            for r in 0..n1 {
                column[r] = buf[r * n2 + c];
            }
            col.process(&mut column);
            for r in 0..n1 {
                buf[r * n2 + c] = column[r];
            }
        }
    }

    /// Complex measurements `Ã x`.
    pub fn apply_complex(&self, x: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        // positive exponent = rustfft's (unnormalized) inverse direction
        self.transform(&mut buf, true);
        let norm = self.scale / (self.signal_len() as f64).sqrt();
        self.indices
            .iter()
            .zip(&self.weights)
            .map(|(&(i, j), &w)| buf[i * self.n2 + j] * (norm * w))
            .collect()
    }

    /// `Re(Ã* ũ)`.
    pub fn adjoint_complex(&self, u: &[Complex<f64>]) -> Vec<f64> {
        let mut buf = vec![Complex::new(0.0, 0.0); self.signal_len()];
        let norm = self.scale / (self.signal_len() as f64).sqrt();
        for ((&(i, j), &w), &ur) in self.indices.iter().zip(&self.weights).zip(u) {
            buf[i * self.n2 + j] += ur * (norm * w);
        }
        self.transform(&mut buf, false);
        buf.into_iter().map(|c| c.re).collect()
    }
}

//! Linear measurement designs behind one forward/adjoint interface.
//!
//! Dense designs are stored row-major. Fourier designs are complex; they are
//! presented as real operators whose output stacks the real parts of all
//! measurements followed by the imaginary parts.

mod fourier;
pub mod io;

pub use fourier::{FourierDesign, SamplingLaw};

use crate::error::{check_len, ItaleError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Backing {
    DenseReal(DenseMatrix),
    FourierWeighted(FourierDesign),
}

/// A linear map `ℝᵖ → ℝᵐ` with its adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    pub backing: Backing,
    /// Multiplier applied to raw noise so that it enters before row
    /// normalization (`1/√n` for generated designs, 1 for user matrices).
    pub noise_scale: f64,
    /// Non-fatal construction warnings, carried into run metadata.
    pub warnings: Vec<String>,
}

impl MeasurementOperator {
    /// Wraps a user-supplied dense matrix.
    pub fn dense(matrix: DenseMatrix) -> Self {
        MeasurementOperator { backing: Backing::DenseReal(matrix), noise_scale: 1.0, warnings: Vec::new() }
    }

    /// Signal length `p`.
    pub fn signal_len(&self) -> usize {
        match &self.backing {
            Backing::DenseReal(m) => m.cols,
            Backing::FourierWeighted(f) => f.signal_len(),
        }
    }

    /// Number of physical measurements (complex rows count once).
    pub fn measurement_count(&self) -> usize {
        match &self.backing {
            Backing::DenseReal(m) => m.rows,
            Backing::FourierWeighted(f) => f.rows(),
        }
    }

    /// Length of the real output vector.
    pub fn output_len(&self) -> usize {
        match &self.backing {
            Backing::DenseReal(m) => m.rows,
            Backing::FourierWeighted(f) => 2 * f.rows(),
        }
    }

    /// Output coordinates belonging to physical measurement `r`.
    pub fn output_rows_of(&self, r: usize) -> Vec<usize> {
        match &self.backing {
            Backing::DenseReal(_) => vec![r],
            Backing::FourierWeighted(f) => vec![r, f.rows() + r],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.signal_len(), x.len())?;
        Ok(match &self.backing {
            Backing::DenseReal(m) => (0..m.rows).map(|r| crate::dot(m.row(r), x)).collect(),
            Backing::FourierWeighted(f) => {
                let c = f.apply_complex(x);
                c.iter().map(|v| v.re).chain(c.iter().map(|v| v.im)).collect()
            }
        })
    }

    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.output_len(), u.len())?;
        Ok(match &self.backing {
            Backing::DenseReal(m) => {
                let mut out = vec![0.0; m.cols];
                for r in 0..m.rows {
                    let ur = u[r];
                    if ur != 0.0 {
                        for (o, a) in out.iter_mut().zip(m.row(r)) {
                            *o += a * ur;
                        }
                    }
                }
                out
            }
            Backing::FourierWeighted(f) => {
                let m = f.rows();
                let c: Vec<Complex<f64>> = (0..m).map(|r| Complex::new(u[r], u[m + r])).collect();
                f.adjoint_complex(&c)
            }
        })
    }

    /// Restriction to the given physical measurements, in the given order.
    /// Row scaling is unchanged.
    pub fn select_measurements(&self, keep: &[usize]) -> Result<Self> {
        let count = self.measurement_count();
        if let Some(&bad) = keep.iter().find(|&&r| r >= count) {
            return Err(ItaleError::InvalidParameter(format!("measurement {bad} out of range 0..{count}")));
        }
        let backing = match &self.backing {
            Backing::DenseReal(m) => {
                let mut data = Vec::with_capacity(keep.len() * m.cols);
                for &r in keep {
                    data.extend_from_slice(m.row(r));
                }
                Backing::DenseReal(DenseMatrix { rows: keep.len(), cols: m.cols, data })
            }
            Backing::FourierWeighted(f) => Backing::FourierWeighted(f.subset(keep)),
        };
        Ok(MeasurementOperator { backing, noise_scale: self.noise_scale, warnings: self.warnings.clone() })
    }

    /// Entries of an output vector belonging to the given physical measurements,
    /// laid out as [`MeasurementOperator::select_measurements`] would produce.
    pub fn select_output(&self, y: &[f64], keep: &[usize]) -> Result<Vec<f64>> {
        check_len(self.output_len(), y.len())?;
        Ok(match &self.backing {
            Backing::DenseReal(_) => keep.iter().map(|&r| y[r]).collect(),
            Backing::FourierWeighted(f) => {
                let m = f.rows();
                keep.iter().map(|&r| y[r]).chain(keep.iter().map(|&r| y[m + r])).collect()
            }
        })
    }

    /// Power-method estimate of `‖A‖²` (largest eigenvalue of `AᵀA`).
    pub fn operator_norm_sq(&self, iterations: usize) -> Result<f64> {
        let p = self.signal_len();
        let mut v: Vec<f64> = (0..p).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
        let mut estimate = 0.0;
        for _ in 0..iterations.max(1) {
            let norm = crate::norm_sq(&v).sqrt();
            if norm == 0.0 {
                return Ok(0.0);
            }
            v.iter_mut().for_each(|x| *x /= norm);
            let w = self.adjoint(&self.apply(&v)?)?;
            estimate = crate::dot(&v, &w);
            v = w;
        }
        Ok(estimate)
    }
}

/// `n × p` matrix of i.i.d. `N(0, 1/n)` entries, filled row by row from a
/// ChaCha20 stream seeded by `seed`.
pub fn gaussian_design(n: usize, p: usize, seed: u64) -> Result<MeasurementOperator> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    gaussian_design_from_rng(n, p, &mut rng)
}

pub fn gaussian_design_from_rng<R: rand::Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<MeasurementOperator> {
    if n == 0 || p == 0 {
        return Err(ItaleError::InvalidSize(format!("design must be at least 1x1, got {n}x{p}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let data = (0..n * p)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect();
    Ok(MeasurementOperator {
        backing: Backing::DenseReal(DenseMatrix { rows: n, cols: p, data }),
        noise_scale: scale,
        warnings: Vec::new(),
    })
}

/// `n` reweighted Fourier rows drawn from `law` with a ChaCha20 stream seeded
/// by `seed`.
pub fn fourier_weighted_design(law: &SamplingLaw, n: usize, seed: u64) -> Result<MeasurementOperator> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let indices = law.sample(n, &mut rng);
    fourier_from_indices(law, indices, Some(seed))
}

/// Rebuilds a Fourier design from its sampled index list.
pub fn fourier_from_indices(
    law: &SamplingLaw,
    indices: Vec<(usize, usize)>,
    seed: Option<u64>,
) -> Result<MeasurementOperator> {
    let n = indices.len();
    if n == 0 {
        return Err(ItaleError::InvalidSize("Fourier design needs at least one row".into()));
    }
    let mut warnings = Vec::new();
    if !law.n1.is_power_of_two() || !law.n2.is_power_of_two() {
        let msg = format!("lattice {}x{} is not a power of two in both dimensions", law.n1, law.n2);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let scale = 1.0 / (n as f64).sqrt();
    let design = FourierDesign::new(law, indices, scale, seed)?;
    Ok(MeasurementOperator { backing: Backing::FourierWeighted(design), noise_scale: scale, warnings })
}

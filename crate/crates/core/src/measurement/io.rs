//! Design files.
//!
//! Dense designs: an 8-byte magic `ITALEMAT`, then little-endian `u32`
//! version (1), `u32` kind (0 = dense), `u64` rows, `u64` cols, `f64` noise
//! scale, and `rows * cols` `f64` values in row-major order.
//!
//! Fourier designs: a TOML record holding the lattice, `c0`, the seed, and the
//! sampled zero-based index list, from which the operator is rebuilt exactly.

use super::{fourier_from_indices, Backing, DenseMatrix, MeasurementOperator, SamplingLaw};
use crate::error::{ItaleError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

const MAGIC: &[u8; 8] = b"ITALEMAT";
const HEADER_LEN: usize = 8 + 4 + 4 + 8 + 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierRecord {
    pub kind: String,
    pub n1: usize,
    pub n2: usize,
    pub c0: f64,
    pub seed: Option<u64>,
    pub indices: Vec<[usize; 2]>,
}

pub fn encode_dense(m: &DenseMatrix, noise_scale: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 + 8 * m.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&1u32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(m.rows as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols as u64).to_le_bytes());
    out.extend_from_slice(&noise_scale.to_le_bytes());
    for v in &m.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn format_err(offset: usize, message: impl Into<String>) -> ItaleError {
    ItaleError::Format { offset, message: message.into() }
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or_else(|| format_err(bytes.len(), "truncated header"))
}

fn read_u64(bytes: &[u8], at: usize) -> Result<u64> {
    bytes
        .get(at..at + 8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
        .ok_or_else(|| format_err(bytes.len(), "truncated header"))
}

pub fn decode_dense(bytes: &[u8]) -> Result<MeasurementOperator> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(format_err(0, "missing dense design magic"));
    }
    let version = read_u32(bytes, 8)?;
    if version != 1 {
        return Err(format_err(8, format!("unsupported version {version}")));
    }
    let kind = read_u32(bytes, 12)?;
    if kind != 0 {
        return Err(format_err(12, format!("unsupported kind {kind}")));
    }
    let rows = read_u64(bytes, 16)? as usize;
    let cols = read_u64(bytes, 24)? as usize;
    let noise_scale = f64::from_bits(read_u64(bytes, 32)?);
    let body = HEADER_LEN + 8;
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(body))
        .ok_or_else(|| format_err(16, "dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(format_err(bytes.len().min(expected), format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let data = bytes[body..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mut op = MeasurementOperator::dense(DenseMatrix { rows, cols, data });
    op.noise_scale = noise_scale;
    Ok(op)
}

pub fn fourier_record(op: &MeasurementOperator) -> Option<FourierRecord> {
    match &op.backing {
        Backing::FourierWeighted(f) => Some(FourierRecord {
            kind: "fourier_weighted".into(),
            n1: f.n1,
            n2: f.n2,
            c0: f.c0,
            seed: f.seed,
            indices: f.indices.iter().map(|&(i, j)| [i, j]).collect(),
        }),
        Backing::DenseReal(_) => None,
    }
}

pub fn operator_from_record(record: &FourierRecord) -> Result<MeasurementOperator> {
    if record.kind != "fourier_weighted" {
        return Err(ItaleError::InvalidParameter(format!("unknown design kind {:?}", record.kind)));
    }
    let law = SamplingLaw::new(record.n1, record.n2, record.c0)?;
    fourier_from_indices(&law, record.indices.iter().map(|&[i, j]| (i, j)).collect(), record.seed)
}

/// Writes a design: binary for dense, TOML for Fourier.
pub fn save_design(op: &MeasurementOperator, path: &Path) -> Result<()> {
    match &op.backing {
        Backing::DenseReal(m) => std::fs::write(path, encode_dense(m, op.noise_scale))?,
        Backing::FourierWeighted(_) => {
            let record = fourier_record(op).expect("fourier backing");
            let text = toml::to_string(&record).map_err(|e| ItaleError::InvalidParameter(e.to_string()))?;
            std::fs::write(path, text)?
        }
    }
    Ok(())
}

/// Reads a design written by [`save_design`], detecting the format by magic.
pub fn load_design(path: &Path) -> Result<MeasurementOperator> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        return decode_dense(&bytes);
    }
    let text = std::str::from_utf8(&bytes).map_err(|e| format_err(e.valid_up_to(), "design is neither binary nor UTF-8"))?;
    let record: FourierRecord = toml::from_str(text).map_err(|e| {
        let offset = e.span().map(|s| s.start).unwrap_or(0);
        format_err(offset, e.message().to_string())
    })?;
    operator_from_record(&record)
}

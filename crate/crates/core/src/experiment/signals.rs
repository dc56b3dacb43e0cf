//! One-dimensional piecewise-constant test signals.

use crate::error::{ItaleError, Result};

/// Zero baseline with elevated segments `[start, start + len)`.
pub fn make_segments_signal(p: usize, starts: &[usize], segment_len: usize, amplitude: f64) -> Result<Vec<f64>> {
    let mut x = vec![0.0; p];
    let mut end_prev = 0usize;
    for (k, &start) in starts.iter().enumerate() {
        if segment_len == 0 || start + segment_len > p {
            return Err(ItaleError::InvalidParameter(format!("segment {k} at {start} does not fit in {p}")));
        }
        if k > 0 && start <= end_prev {
            return Err(ItaleError::InvalidParameter(format!("segment {k} at {start} overlaps or touches segment {}", k - 1)));
        }
        x[start..start + segment_len].iter_mut().for_each(|v| *v = amplitude);
        end_prev = start + segment_len;
    }
    Ok(x)
}

/// `n_segments` evenly spread segments of height `amplitude`: segment `k` ends
/// at `(k + 1) · p / n_segments`, so the last one sits flush with the end.
pub fn make_spike_signal(p: usize, n_segments: usize, segment_len: usize, amplitude: f64) -> Result<Vec<f64>> {
    if n_segments == 0 {
        return Ok(vec![0.0; p]);
    }
    let spacing = p / n_segments;
    if segment_len >= spacing {
        return Err(ItaleError::InvalidParameter(format!(
            "{n_segments} segments of length {segment_len} overlap in {p} vertices"
        )));
    }
    let starts: Vec<usize> = (0..n_segments)
        .map(|k| if k + 1 == n_segments { p - segment_len } else { (k + 1) * spacing - segment_len })
        .collect();
    let x = make_segments_signal(p, &starts, segment_len, amplitude)?;
    log::debug!("spike signal p={p}: gradient support {}", changepoints(&x));
    Ok(x)
}

/// `n_breaks + 1` equal-length blocks cycling through `amplitudes`.
pub fn make_wave_signal(p: usize, n_breaks: usize, amplitudes: &[f64]) -> Result<Vec<f64>> {
    if n_breaks >= p {
        return Err(ItaleError::InvalidParameter(format!("{n_breaks} breaks need more than {p} vertices")));
    }
    if amplitudes.is_empty() {
        return Err(ItaleError::InvalidParameter("wave needs at least one amplitude".into()));
    }
    let blocks = n_breaks + 1;
    let l = amplitudes.len();
    if n_breaks > 0 && (0..blocks - 1).any(|k| amplitudes[k % l] == amplitudes[(k + 1) % l]) {
        return Err(ItaleError::InvalidParameter("adjacent wave amplitudes must differ".into()));
    }
    Ok((0..p).map(|i| amplitudes[(i * blocks / p) % l]).collect())
}

fn changepoints(x: &[f64]) -> usize {
    x.windows(2).filter(|w| w[0] != w[1]).count()
}

//! Phantom images: binary graymap (P5) and CSV input, P5 output, and
//! generated fixtures.

use crate::error::{ItaleError, Result};
use crate::graph::{lattice_graph, GraphTopology};
use std::io::Write;
use std::path::Path;

/// Row-major image; pixel `(r, c)` is `data[r * cols + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn topology(&self) -> Result<GraphTopology> {
        lattice_graph(self.rows, self.cols)
    }

    /// Rescales by the maximum value; an all-zero image is left as is.
    pub fn normalize_max(&mut self) {
        let max = self.data.iter().copied().fold(0.0f64, f64::max);
        if max > 0.0 {
            self.data.iter_mut().for_each(|v| *v /= max);
        }
    }
}

fn format_err(offset: usize, message: impl Into<String>) -> ItaleError {
    ItaleError::Format { offset, message: message.into() }
}

/// Reads a P5 graymap or a CSV matrix and scales it to `[0, 1]` by its
/// maximum.
pub fn load_phantom(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path)?;
    let mut img = if bytes.starts_with(b"P5") { parse_pgm(&bytes)? } else { parse_csv(&bytes)? };
    img.normalize_max();
    Ok(img)
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format_err(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| format_err(start, format!("{what} out of range")))
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    if !bytes.starts_with(b"P5") {
        return Err(format_err(0, "missing P5 magic"));
    }
    let mut h = Header { bytes, pos: 2 };
    let cols = h.number("width")?;
    let rows = h.number("height")?;
    let max_at = h.pos;
    let maxval = h.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(max_at, format!("maxval {maxval} outside 1..=65535")));
    }
    if rows == 0 || cols == 0 {
        return Err(format_err(2, "empty image"));
    }
    if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
        return Err(format_err(h.pos, "expected whitespace before raster"));
    }
    let body = h.pos + 1;
    let width = if maxval < 256 { 1 } else { 2 };
    let expected = rows * cols * width;
    if bytes.len() - body < expected {
        return Err(format_err(bytes.len(), format!("raster truncated: expected {expected} bytes")));
    }
    let raster = &bytes[body..body + expected];
    let data = if width == 1 {
        raster.iter().map(|&b| b as f64).collect()
    } else {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
    };
    Ok(Image { rows, cols, data })
}

pub fn parse_csv(bytes: &[u8]) -> Result<Image> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(bytes);
    let mut data = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    let mut record = csv::StringRecord::new();
    loop {
        let offset = reader.position().byte() as usize;
        let more = reader.read_record(&mut record).map_err(|e| {
            let at = e.position().map_or(offset, |p| p.byte() as usize);
            format_err(at, e.to_string())
        })?;
        if !more {
            break;
        }
        if rows == 0 {
            cols = record.len();
        } else if record.len() != cols {
            return Err(format_err(offset, format!("row {rows} has {} values, expected {cols}", record.len())));
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| format_err(offset, format!("invalid number {field:?}")))?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(format_err(offset, format!("pixel value {field} is negative or not finite")));
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 || cols == 0 {
        return Err(format_err(0, "empty image"));
    }
    Ok(Image { rows, cols, data })
}

/// Writes an 8-bit P5 graymap; values are clamped to `[0, 1]`.
pub fn write_pgm<W: Write>(img: &Image, mut out: W) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", img.cols, img.rows)?;
    let raster: Vec<u8> = img.data.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    out.write_all(&raster)?;
    Ok(())
}

/// Background 0.25 with a centered square of 1.0 covering half of each side.
pub fn two_region(size: usize) -> Image {
    let (lo, hi) = (size / 4, size - size / 4);
    let data = (0..size * size)
        .map(|k| {
            let (r, c) = (k / size, k % size);
            if (lo..hi).contains(&r) && (lo..hi).contains(&c) {
                1.0
            } else {
                0.25
            }
        })
        .collect();
    Image { rows: size, cols: size, data }
}

// intensity, semi-axes, center, rotation in degrees
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Modified (high-contrast) Shepp–Logan head phantom sampled at pixel centers,
/// scaled to `[0, 1]`.
pub fn shepp_logan(size: usize) -> Image {
    let n = size as f64;
    let mut data = vec![0.0; size * size];
    for r in 0..size {
        for c in 0..size {
            let x = (2.0 * c as f64 + 1.0) / n - 1.0;
            let y = 1.0 - (2.0 * r as f64 + 1.0) / n;
            let mut v = 0.0;
            for &(intensity, a, b, x0, y0, phi) in &SHEPP_LOGAN {
                let (s, co) = phi.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let (u, w) = (dx * co + dy * s, -dx * s + dy * co);
                if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
                    v += intensity;
                }
            }
            // 1 - 0.8 - 0.2 leaves rounding residue
            data[r * size + c] = if v.abs() < 1e-9 { 0.0 } else { v };
        }
    }
    let mut img = Image { rows: size, cols: size, data };
    img.normalize_max();
    img
}

/// Built-in fixture by name.
pub fn builtin_phantom(name: &str, size: usize) -> Result<Image> {
    if size < 2 {
        return Err(ItaleError::InvalidSize(format!("phantom size {size} is below 2")));
    }
    match name {
        "two_region" => Ok(two_region(size)),
        "shepp_logan" => Ok(shepp_logan(size)),
        other => Err(ItaleError::InvalidParameter(format!("unknown phantom {other:?}"))),
    }
}

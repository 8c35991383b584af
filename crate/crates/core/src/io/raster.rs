//! Single-plane outputs: 8-bit PGM previews and raw float32 rasters with a
//! text sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use super::keyvalue::KeyValues;
use super::IoError;
use crate::cube::ScalarField;

/// Maps `field` linearly onto 0..=255 over `[min, max]` and writes a binary
/// (P5) PGM, top row first.
pub fn write_gray_pgm(field: &ScalarField, min: f64, max: f64, path: &Path) -> Result<(), IoError> {
    if !(max > min) {
        return Err(IoError::EmptyRange { min, max });
    }
    let span = max - min;
    let mut bytes = format!("P5\n{} {}\n255\n", field.width(), field.height()).into_bytes();
    bytes.extend(field.values().iter().map(|&v| {
        let t = ((v - min) / span).clamp(0.0, 1.0);
        // round half up
        (255.0 * t + 0.5).floor() as u8
    }));
    fs::write(path, bytes).map_err(|e| IoError::io(path, e))
}

/// `scores.f32` -> `scores.f32.hdr`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".hdr");
    PathBuf::from(name)
}

/// Writes row-major little-endian float32 samples to `path` and an
/// ENVI-style sidecar with the dimensions to `<path>.hdr`.
pub fn write_float_raster(field: &ScalarField, path: &Path) -> Result<(), IoError> {
    let bytes: Vec<u8> = field
        .values()
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    let header = format!(
        "ENVI\nsamples = {}\nlines = {}\nbands = 1\nheader offset = 0\ndata type = 4\ninterleave = bsq\nbyte order = 0\n",
        field.width(),
        field.height()
    );
    let side = sidecar_path(path);
    fs::write(path, bytes).map_err(|e| IoError::io(path, e))?;
    fs::write(&side, header).map_err(|e| IoError::io(&side, e))
}

pub fn read_float_raster(path: &Path) -> Result<ScalarField, IoError> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| IoError::io(&side, e))?;
    let kv = KeyValues::parse(&text)?;
    let dim = |key: &'static str| -> Result<usize, IoError> {
        let raw = kv.get(key).ok_or(IoError::MissingField(key))?;
        raw.parse().map_err(|_| IoError::UnsupportedValue {
            field: key,
            value: raw.to_string(),
        })
    };
    let (width, height) = (dim("samples")?, dim("lines")?);
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    let expected = width * height * 4;
    if bytes.len() != expected {
        return Err(IoError::SizeMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(ScalarField::new(width, height, values)?)
}

//! ENVI header parsing and raster decoding (BSQ, BIL, BIP).

use std::fs;
use std::path::{Path, PathBuf};

use super::keyvalue::{split_list, KeyValues};
use super::IoError;
use crate::cube::HyperspectralCube;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

/// ENVI `data type` codes accepted by the reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    Int16,
    UInt16,
    Float32,
    Float64,
}

impl DataType {
    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            2 => Some(Self::Int16),
            12 => Some(Self::UInt16),
            4 => Some(Self::Float32),
            5 => Some(Self::Float64),
            _ => None,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            Self::Int16 => 2,
            Self::UInt16 => 12,
            Self::Float32 => 4,
            Self::Float64 => 5,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Self::Int16 | Self::UInt16 => 2,
            Self::Float32 => 4,
            Self::Float64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Self::Float32 | Self::Float64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnviHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub interleave: Interleave,
    pub data_type: DataType,
    pub byte_order: ByteOrder,
    pub header_offset: usize,
    pub wavelengths: Option<Vec<f64>>,
}

impl EnviHeader {
    /// Bytes of pixel payload following `header_offset`.
    pub fn payload_len(&self) -> usize {
        self.samples * self.lines * self.bands * self.data_type.size()
    }
}

fn required<'a>(kv: &'a KeyValues, key: &'static str) -> Result<&'a str, IoError> {
    kv.get(key).ok_or(IoError::MissingField(key))
}

fn parse_count(kv: &KeyValues, key: &'static str) -> Result<usize, IoError> {
    let raw = required(kv, key)?;
    match raw.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(IoError::UnsupportedValue {
            field: key,
            value: raw.to_string(),
        }),
    }
}

pub fn parse_envi_header(text: &str) -> Result<EnviHeader, IoError> {
    let kv = KeyValues::parse(text)?;
    let samples = parse_count(&kv, "samples")?;
    let lines = parse_count(&kv, "lines")?;
    let bands = parse_count(&kv, "bands")?;

    let raw = required(&kv, "interleave")?;
    let interleave = match raw.to_ascii_lowercase().as_str() {
        "bsq" => Interleave::Bsq,
        "bil" => Interleave::Bil,
        "bip" => Interleave::Bip,
        _ => {
            return Err(IoError::UnsupportedValue {
                field: "interleave",
                value: raw.to_string(),
            })
        }
    };

    let raw = required(&kv, "data type")?;
    let data_type = raw
        .parse::<u32>()
        .ok()
        .and_then(DataType::from_code)
        .ok_or_else(|| IoError::UnsupportedValue {
            field: "data type",
            value: raw.to_string(),
        })?;

    let byte_order = match kv.get("byte order") {
        None | Some("0") => ByteOrder::Little,
        Some("1") => ByteOrder::Big,
        Some(other) => {
            return Err(IoError::UnsupportedValue {
                field: "byte order",
                value: other.to_string(),
            })
        }
    };

    let header_offset = match kv.get("header offset") {
        None => 0,
        Some(raw) => raw.parse().map_err(|_| IoError::UnsupportedValue {
            field: "header offset",
            value: raw.to_string(),
        })?,
    };

    let wavelengths = match kv.get("wavelength") {
        None => None,
        Some(raw) => {
            let items = split_list(raw);
            let parsed: Result<Vec<f64>, _> = items.iter().map(|s| s.parse::<f64>()).collect();
            let wl = parsed.map_err(|_| IoError::UnsupportedValue {
                field: "wavelength",
                value: raw.to_string(),
            })?;
            if wl.len() != bands || wl.windows(2).any(|w| w[1] <= w[0]) {
                return Err(IoError::UnsupportedValue {
                    field: "wavelength",
                    value: raw.to_string(),
                });
            }
            Some(wl)
        }
    };

    Ok(EnviHeader {
        samples,
        lines,
        bands,
        interleave,
        data_type,
        byte_order,
        header_offset,
        wavelengths,
    })
}

fn decode(chunk: &[u8], data_type: DataType, order: ByteOrder) -> f64 {
    macro_rules! read {
        ($t:ty, $n:expr) => {{
            let bytes: [u8; $n] = chunk.try_into().expect("chunk sized by data type");
            match order {
                ByteOrder::Little => <$t>::from_le_bytes(bytes) as f64,
                ByteOrder::Big => <$t>::from_be_bytes(bytes) as f64,
            }
        }};
    }
    match data_type {
        DataType::Int16 => read!(i16, 2),
        DataType::UInt16 => read!(u16, 2),
        DataType::Float32 => read!(f32, 4),
        DataType::Float64 => read!(f64, 8),
    }
}

/// Decodes `raster` (the whole file, header offset included) into a
/// band-major cube.
pub fn load_cube(header: &EnviHeader, raster: &[u8]) -> Result<HyperspectralCube, IoError> {
    let needed = header.header_offset + header.payload_len();
    if raster.len() < needed {
        return Err(IoError::SizeMismatch {
            expected: needed,
            actual: raster.len(),
        });
    }
    let (w, h, b) = (header.samples, header.lines, header.bands);
    let plane = w * h;
    let size = header.data_type.size();
    let payload = &raster[header.header_offset..needed];
    let mut values = vec![0.0; plane * b];

    for (i, chunk) in payload.chunks_exact(size).enumerate() {
        let v = decode(chunk, header.data_type, header.byte_order);
        if header.data_type.is_float() && !v.is_finite() {
            return Err(IoError::NonFiniteValue { index: i });
        }
        let (band, row, col) = match header.interleave {
            Interleave::Bsq => (i / plane, (i % plane) / w, i % w),
            Interleave::Bil => (((i / w) % b), i / (w * b), i % w),
            Interleave::Bip => (i % b, i / (w * b), (i / b) % w),
        };
        values[band * plane + row * w + col] = v;
    }

    Ok(HyperspectralCube::new(
        w,
        h,
        b,
        values,
        header.wavelengths.clone(),
    )?)
}

/// Finds the raster next to a header: `x.hdr` pairs with `x`, `x.img`,
/// `x.dat`, `x.raw`, `x.bsq`, `x.bil` or `x.bip`.
pub fn raster_path_for(header_path: &Path) -> Option<PathBuf> {
    let stem = header_path.with_extension("");
    let mut candidates = vec![stem.clone()];
    for ext in ["img", "dat", "raw", "bsq", "bil", "bip"] {
        candidates.push(stem.with_extension(ext));
    }
    candidates
        .into_iter()
        .find(|p| p != header_path && p.is_file())
}

pub fn read_envi(header_path: &Path) -> Result<HyperspectralCube, IoError> {
    let text = fs::read_to_string(header_path).map_err(|e| IoError::io(header_path, e))?;
    let header = parse_envi_header(&text)?;
    let raster_path =
        raster_path_for(header_path).ok_or_else(|| IoError::MissingRaster(header_path.into()))?;
    let raster = fs::read(&raster_path).map_err(|e| IoError::io(&raster_path, e))?;
    load_cube(&header, &raster)
}

/// Writes `cube` as little-endian float32 BSQ: `<stem>.img` plus `<stem>.hdr`.
/// Returns the header path.
pub fn write_envi_f32(cube: &HyperspectralCube, stem: &Path) -> Result<PathBuf, IoError> {
    let header_path = stem.with_extension("hdr");
    let raster_path = stem.with_extension("img");
    let mut text = format!(
        "ENVI\nsamples = {}\nlines = {}\nbands = {}\nheader offset = 0\nfile type = ENVI Standard\ndata type = 4\ninterleave = bsq\nbyte order = 0\n",
        cube.width(),
        cube.height(),
        cube.band_count()
    );
    if let Some(wl) = cube.wavelengths() {
        let list: Vec<String> = wl.iter().map(|v| format!("{v}")).collect();
        text.push_str(&format!("wavelength = {{{}}}\n", list.join(", ")));
    }
    let bytes: Vec<u8> = cube
        .values()
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    fs::write(&header_path, text).map_err(|e| IoError::io(&header_path, e))?;
    fs::write(&raster_path, bytes).map_err(|e| IoError::io(&raster_path, e))?;
    Ok(header_path)
}

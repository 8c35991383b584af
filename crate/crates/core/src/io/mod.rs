//! Reading ENVI cubes and writing pipeline outputs.

mod envi;
pub mod keyvalue;
mod raster;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use envi::{
    load_cube, parse_envi_header, raster_path_for, read_envi, write_envi_f32, ByteOrder,
    DataType, EnviHeader, Interleave,
};
pub use raster::{read_float_raster, write_float_raster, write_gray_pgm, sidecar_path};

use crate::cube::CubeError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("header is missing required field `{0}`")]
    MissingField(&'static str),
    #[error("unsupported value {value:?} for `{field}`")]
    UnsupportedValue { field: &'static str, value: String },
    #[error(transparent)]
    Syntax(#[from] keyvalue::KeyValueError),
    #[error("raster holds {actual} bytes, header requires {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("non-finite sample at element {index}")]
    NonFiniteValue { index: usize },
    #[error("no raster file found next to {0}")]
    MissingRaster(PathBuf),
    #[error("pgm range requires max > min (got min={min}, max={max})")]
    EmptyRange { min: f64, max: f64 },
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error("{path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::IoFailure {
            path: path.to_path_buf(),
            source,
        }
    }
}

//! In-memory rasters: the band-major hyperspectral cube and single-plane
//! scalar fields used for every per-pixel map in the pipeline.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CubeError {
    #[error("cube must be at least 3x3 pixels, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("cube must have at least one band")]
    NoBands,
    #[error("expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("wavelength list has {actual} entries for {bands} bands or is not strictly increasing")]
    BadWavelengths { bands: usize, actual: usize },
    #[error("band index {index} out of range for {bands} bands")]
    BandOutOfRange { index: usize, bands: usize },
}

/// A `width x height x bands` raster stored band-major: band `n` is the
/// contiguous, row-major plane `values[n*w*h .. (n+1)*w*h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperspectralCube {
    width: usize,
    height: usize,
    bands: usize,
    values: Vec<f64>,
    wavelengths: Option<Vec<f64>>,
}

impl HyperspectralCube {
    pub fn new(
        width: usize,
        height: usize,
        bands: usize,
        values: Vec<f64>,
        wavelengths: Option<Vec<f64>>,
    ) -> Result<Self, CubeError> {
        if width < 3 || height < 3 {
            return Err(CubeError::TooSmall { width, height });
        }
        if bands == 0 {
            return Err(CubeError::NoBands);
        }
        let expected = width * height * bands;
        if values.len() != expected {
            return Err(CubeError::SizeMismatch {
                expected,
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(CubeError::NonFiniteValue { index });
        }
        if let Some(wl) = &wavelengths {
            if wl.len() != bands || wl.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CubeError::BadWavelengths {
                    bands,
                    actual: wl.len(),
                });
            }
        }
        Ok(Self {
            width,
            height,
            bands,
            values,
            wavelengths,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn band_count(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn wavelengths(&self) -> Option<&[f64]> {
        self.wavelengths.as_deref()
    }

    pub fn band(&self, n: usize) -> &[f64] {
        let plane = self.pixel_count();
        &self.values[n * plane..(n + 1) * plane]
    }

    pub fn band_field(&self, n: usize) -> ScalarField {
        ScalarField {
            width: self.width,
            height: self.height,
            values: self.band(n).to_vec(),
        }
    }

    /// Spectrum of the pixel at row-major index `pixel`.
    pub fn spectrum(&self, pixel: usize) -> Vec<f64> {
        let plane = self.pixel_count();
        (0..self.bands)
            .map(|n| self.values[n * plane + pixel])
            .collect()
    }

    /// All spectra, pixel-major: `out[p * bands + n]`.
    pub fn to_pixel_major(&self) -> Vec<f64> {
        let plane = self.pixel_count();
        let mut out = vec![0.0; self.values.len()];
        for n in 0..self.bands {
            let band = &self.values[n * plane..(n + 1) * plane];
            for (p, &v) in band.iter().enumerate() {
                out[p * self.bands + n] = v;
            }
        }
        out
    }

    /// New cube holding only `indices`, in the order given.
    pub fn select_bands(&self, indices: &[usize]) -> Result<Self, CubeError> {
        if indices.is_empty() {
            return Err(CubeError::NoBands);
        }
        let mut values = Vec::with_capacity(indices.len() * self.pixel_count());
        for &n in indices {
            if n >= self.bands {
                return Err(CubeError::BandOutOfRange {
                    index: n,
                    bands: self.bands,
                });
            }
            values.extend_from_slice(self.band(n));
        }
        let wavelengths = self
            .wavelengths
            .as_ref()
            .map(|wl| indices.iter().map(|&n| wl[n]).collect());
        Self::new(self.width, self.height, indices.len(), values, wavelengths)
    }
}

/// One real value per pixel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, CubeError> {
        if values.len() != width * height {
            return Err(CubeError::SizeMismatch {
                expected: width * height,
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(CubeError::NonFiniteValue { index });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn same_shape(&self, other: &ScalarField) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.values.iter().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_cube() -> HyperspectralCube {
        let values = (0..3 * 3 * 2).map(f64::from).collect();
        HyperspectralCube::new(3, 3, 2, values, Some(vec![400.0, 500.0])).unwrap()
    }

    #[test]
    fn band_major_layout() {
        let cube = ramp_cube();
        assert_eq!(cube.band(1)[0], 9.0);
        assert_eq!(cube.spectrum(4), vec![4.0, 13.0]);
        let pm = cube.to_pixel_major();
        assert_eq!(&pm[8..10], &[4.0, 13.0]);
    }

    #[test]
    fn rejects_small_or_nonfinite() {
        assert_eq!(
            HyperspectralCube::new(2, 3, 1, vec![0.0; 6], None),
            Err(CubeError::TooSmall { width: 2, height: 3 })
        );
        let mut v = vec![0.0; 9];
        v[5] = f64::NAN;
        assert_eq!(
            HyperspectralCube::new(3, 3, 1, v, None),
            Err(CubeError::NonFiniteValue { index: 5 })
        );
    }

    #[test]
    fn wavelengths_must_increase() {
        let r = HyperspectralCube::new(3, 3, 2, vec![0.0; 18], Some(vec![500.0, 400.0]));
        assert!(matches!(r, Err(CubeError::BadWavelengths { .. })));
    }

    #[test]
    fn select_keeps_order_and_wavelengths() {
        let cube = ramp_cube();
        let sub = cube.select_bands(&[1]).unwrap();
        assert_eq!(sub.band_count(), 1);
        assert_eq!(sub.band(0), cube.band(1));
        assert_eq!(sub.wavelengths(), Some(&[500.0][..]));
    }
}

//! Per-band noise level from the 3x3 Laplacian-difference mask, and removal
//! of bands whose level exceeds half the mean level.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cube::{CubeError, HyperspectralCube, ScalarField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("noise estimation needs at least 3x3 pixels, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("every band exceeds the noise threshold {threshold} (sigma = {sigma:?})")]
    AllBandsDropped { threshold: f64, sigma: Vec<f64> },
    #[error(transparent)]
    Cube(#[from] CubeError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReport {
    pub sigma: Vec<f64>,
    pub threshold: f64,
    pub kept: Vec<usize>,
}

/// Mask response at interior pixel `(x, y)` of a row-major plane.
#[inline]
fn mask_response(plane: &[f64], width: usize, x: usize, y: usize) -> f64 {
    let up = &plane[(y - 1) * width + x - 1..(y - 1) * width + x + 2];
    let mid = &plane[y * width + x - 1..y * width + x + 2];
    let down = &plane[(y + 1) * width + x - 1..(y + 1) * width + x + 2];
    (up[0] - 2.0 * up[1] + up[2]) - 2.0 * (mid[0] - 2.0 * mid[1] + mid[2])
        + (down[0] - 2.0 * down[1] + down[2])
}

fn plane_noise(plane: &[f64], width: usize, height: usize) -> Result<f64, NoiseError> {
    if width < 3 || height < 3 {
        return Err(NoiseError::TooSmall { width, height });
    }
    let mut total = 0.0;
    for y in 1..height - 1 {
        let mut row = 0.0;
        for x in 1..width - 1 {
            row += mask_response(plane, width, x, y).abs();
        }
        total += row;
    }
    let interior = ((width - 2) * (height - 2)) as f64;
    Ok((std::f64::consts::PI / 2.0).sqrt() * total / (6.0 * interior))
}

/// Noise level of one band; zero for any affine-in-x-and-y plane.
pub fn estimate_band_noise(band: &ScalarField) -> Result<f64, NoiseError> {
    plane_noise(band.values(), band.width(), band.height())
}

/// Threshold and kept set for precomputed per-band levels.
pub fn select_bands(sigma: &[f64]) -> NoiseReport {
    let threshold = sigma.iter().sum::<f64>() / (2.0 * sigma.len() as f64);
    let kept = sigma
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s < threshold)
        .map(|(n, _)| n)
        .collect();
    NoiseReport {
        sigma: sigma.to_vec(),
        threshold,
        kept,
    }
}

pub fn band_noise_levels(cube: &HyperspectralCube) -> Vec<f64> {
    (0..cube.band_count())
        .into_par_iter()
        .map(|n| {
            plane_noise(cube.band(n), cube.width(), cube.height())
                .expect("cube invariant guarantees 3x3")
        })
        .collect()
}

/// Drops noisy bands. Fails with `AllBandsDropped` when nothing survives,
/// which happens e.g. when every band has the same non-zero level.
pub fn screen_bands(
    cube: &HyperspectralCube,
) -> Result<(HyperspectralCube, NoiseReport), NoiseError> {
    let report = select_bands(&band_noise_levels(cube));
    if report.kept.is_empty() {
        return Err(NoiseError::AllBandsDropped {
            threshold: report.threshold,
            sigma: report.sigma,
        });
    }
    let screened = cube.select_bands(&report.kept)?;
    Ok((screened, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: explicit 3x3 kernel correlation.
    fn oracle(values: &[f64], w: usize, h: usize) -> f64 {
        let m = [[1.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 1.0]];
        let mut sum = 0.0;
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let mut acc = 0.0;
                for (dy, row) in m.iter().enumerate() {
                    for (dx, k) in row.iter().enumerate() {
                        acc += k * values[(y + dy - 1) * w + (x + dx - 1)];
                    }
                }
                sum += acc.abs();
            }
        }
        (std::f64::consts::PI / 2.0).sqrt() * sum / (6.0 * ((w - 2) * (h - 2)) as f64)
    }

    fn checkerboard(w: usize, h: usize) -> ScalarField {
        let v = (0..w * h).map(|i| ((i % w + i / w) % 2) as f64).collect();
        ScalarField::new(w, h, v).unwrap()
    }

    #[test]
    fn constant_band_is_noise_free() {
        assert_eq!(estimate_band_noise(&ScalarField::filled(5, 4, 3.7)).unwrap(), 0.0);
    }

    #[test]
    fn checkerboard_closed_form() {
        let expected = (std::f64::consts::PI / 2.0).sqrt() * 8.0 / 6.0;
        for (w, h) in [(3, 3), (4, 7), (10, 9)] {
            let f = checkerboard(w, h);
            let got = estimate_band_noise(&f).unwrap();
            assert!((got - expected).abs() < 1e-12, "{w}x{h}: {got}");
            assert!((oracle(f.values(), w, h) - expected).abs() < 1e-12);
        }
        assert!((expected - 1.6711).abs() < 1e-4);
    }

    #[test]
    fn too_small() {
        let f = ScalarField::filled(2, 5, 0.0);
        assert_eq!(
            estimate_band_noise(&f),
            Err(NoiseError::TooSmall { width: 2, height: 5 })
        );
    }

    #[test]
    fn threshold_arithmetic() {
        let r = select_bands(&[1.0, 1.0, 1.0, 9.0]);
        assert_eq!(r.threshold, 1.5);
        assert_eq!(r.kept, vec![0, 1, 2]);
    }

    #[test]
    fn equal_levels_drop_everything() {
        // two bands: one pure checkerboard, one scaled copy with identical level
        let cb = checkerboard(4, 4);
        let mut values = cb.values().to_vec();
        values.extend_from_slice(cb.values());
        let cube = HyperspectralCube::new(4, 4, 2, values, None).unwrap();
        match screen_bands(&cube) {
            Err(NoiseError::AllBandsDropped { threshold, .. }) => {
                let c = estimate_band_noise(&cb).unwrap();
                assert!((threshold - c / 2.0).abs() < 1e-15);
            }
            other => panic!("expected AllBandsDropped, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn matches_convolution_oracle(
            (w, h, vals) in (3usize..9, 3usize..9).prop_flat_map(|(w, h)| {
                (Just(w), Just(h), prop::collection::vec(-10.0f64..10.0, w * h))
            })
        ) {
            let f = ScalarField::new(w, h, vals).unwrap();
            let got = estimate_band_noise(&f).unwrap();
            prop_assert!((got - oracle(f.values(), w, h)).abs() <= 1e-12 * (1.0 + got));
        }

        #[test]
        fn scale_equivariant(
            vals in prop::collection::vec(-5.0f64..5.0, 36),
            c in 0.01f64..100.0,
        ) {
            let f = ScalarField::new(6, 6, vals).unwrap();
            let base = estimate_band_noise(&f).unwrap();
            let scaled = estimate_band_noise(&f.map(|v| v * c)).unwrap();
            prop_assert!((scaled - c * base).abs() <= 1e-12 * (1.0 + scaled));
        }

        #[test]
        fn kept_is_ordered_subsequence(sigma in prop::collection::vec(0.0f64..10.0, 1..40)) {
            let r = select_bands(&sigma);
            prop_assert!(r.kept.windows(2).all(|w| w[0] < w[1]));
            for (n, &s) in sigma.iter().enumerate() {
                prop_assert_eq!(r.kept.contains(&n), s < r.threshold);
            }
        }
    }
}

//! Synthetic hyperspectral sea scenes with planted oil slicks.
//!
//! Each pixel is `sea[b] + mask * oil_offset[b] + N(0, noise_sigma[b])`,
//! where the mask is a union of discs. Scenes are a pure function of the
//! spec and seed; band `b` draws from its own substream.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::cube::{HyperspectralCube, ScalarField};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
}

/// A disc with a logistic edge of width `softness` pixels (0 = hard edge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub softness: f64,
}

impl Blob {
    pub fn new(center_x: f64, center_y: f64, radius: f64, softness: f64) -> Self {
        Self {
            center_x,
            center_y,
            radius,
            softness,
        }
    }

    /// Membership in `[0, 1]` of the pixel centred at `(x, y)`.
    pub fn membership(&self, x: f64, y: f64) -> f64 {
        let d = ((x - self.center_x).powi(2) + (y - self.center_y).powi(2)).sqrt();
        if self.softness <= 0.0 {
            return if d <= self.radius { 1.0 } else { 0.0 };
        }
        1.0 / (1.0 + ((d - self.radius) / self.softness).exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub band_count: usize,
    pub slick_blobs: Vec<Blob>,
    pub sea_signature: Vec<f64>,
    pub oil_offset: Vec<f64>,
    pub noise_sigma: Vec<f64>,
    /// Bands whose entry in `noise_sigma` was inflated. Bookkeeping only:
    /// generation reads `noise_sigma` directly.
    pub severe_band_indices: Vec<usize>,
    pub wavelengths: Option<Vec<f64>>,
}

/// Binary oil mask, 1 = oil.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub mask: ScalarField,
}

impl GroundTruth {
    pub fn oil_fraction(&self) -> f64 {
        self.mask.values().iter().sum::<f64>() / self.mask.len() as f64
    }
}

pub const REFERENCE_SIZE: usize = 256;
pub const REFERENCE_BANDS: usize = 100;
/// Noise of the high-SNR bands that carry the oil contrast.
pub const QUIET_NOISE: f64 = 5e-4;
/// Noise of the elevated bands; also the baseline the severe bands scale.
pub const ELEVATED_NOISE: f64 = 0.01;
pub const SEVERE_FACTOR: f64 = 50.0;
pub const REFERENCE_OIL_AMPLITUDE: f64 = 0.007;

/// Twenty reference bands with inflated noise, modelled on the water
/// absorption windows plus both spectral edges.
pub const REFERENCE_SEVERE_BANDS: [usize; 20] = [
    0, 1, 44, 45, 46, 47, 48, 49, 50, 51, 66, 67, 68, 69, 70, 71, 72, 73, 98, 99,
];

/// Bands flanking the absorption windows and the spectral edges. They are
/// noisier than the rest, and sea and oil are equally dark there.
pub const REFERENCE_ELEVATED_BANDS: [usize; 6] = [2, 43, 52, 65, 74, 97];

fn sea_reflectance(wl: f64) -> f64 {
    0.02 + 0.05 * (-((wl - 480.0) / 220.0).powi(2)).exp()
}

fn oil_shape(wl: f64) -> f64 {
    1.0 + 0.5 * ((wl - 400.0) / 350.0).sin()
}

fn wavelength_grid(band_count: usize) -> Vec<f64> {
    (0..band_count)
        .map(|b| 400.0 + 2100.0 * b as f64 / (band_count.max(2) - 1) as f64)
        .collect()
}

/// The handful of numbers that describe a reference-style scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRecipe {
    pub width: usize,
    pub height: usize,
    pub band_count: usize,
    pub quiet_noise: f64,
    pub elevated_noise: f64,
    pub severe_noise: f64,
    pub oil_amplitude: f64,
    pub elevated_bands: Vec<usize>,
    pub severe_bands: Vec<usize>,
    pub blobs: Vec<Blob>,
}

impl SceneRecipe {
    /// 256x256x100 with three slicks covering about 10% of the pixels.
    pub fn reference() -> Self {
        Self::sized(REFERENCE_SIZE, REFERENCE_SIZE, REFERENCE_BANDS)
    }

    /// Reference layout at another size: blobs scale with the frame and
    /// band roles map proportionally onto the new band count. The oil
    /// amplitude is rescaled so the oil-sea spectral distance keeps its
    /// reference ratio to the spread of the elevated-noise bands; when
    /// oil sits far outside that spread the forest sees it as an inlier.
    pub fn sized(width: usize, height: usize, band_count: usize) -> Self {
        let sx = width as f64 / REFERENCE_SIZE as f64;
        let sy = height as f64 / REFERENCE_SIZE as f64;
        let sr = sx.min(sy);
        let blobs = [(80.0, 90.0, 32.0), (180.0, 170.0, 24.0), (190.0, 60.0, 22.0)]
            .iter()
            .map(|&(x, y, r)| Blob::new(x * sx, y * sy, r * sr, 2.0))
            .collect();
        let map = |bands: &[usize]| {
            let mut v: Vec<usize> = bands.iter().map(|&b| b * band_count / REFERENCE_BANDS).collect();
            v.dedup();
            v
        };
        let severe_bands = map(&REFERENCE_SEVERE_BANDS);
        // Each elevated band moves to the nearest band that is neither
        // severe nor taken, so small band counts keep all of them.
        let mut elevated_bands: Vec<usize> = Vec::new();
        for &b in &REFERENCE_ELEVATED_BANDS {
            let target = (b * band_count / REFERENCE_BANDS) as isize;
            let free = |c: isize| {
                c >= 0
                    && (c as usize) < band_count
                    && !severe_bands.contains(&(c as usize))
                    && !elevated_bands.contains(&(c as usize))
            };
            if let Some(c) = (0..band_count as isize)
                .flat_map(|d| [target - d, target + d])
                .find(|&c| free(c))
            {
                elevated_bands.push(c as usize);
            }
        }
        elevated_bands.sort_unstable();
        let quiet = (0..band_count)
            .filter(|b| !elevated_bands.contains(b) && !severe_bands.contains(b))
            .count()
            .max(1) as f64;
        let elevated = elevated_bands.len().max(1) as f64;
        let reference_elevated = REFERENCE_ELEVATED_BANDS.len() as f64;
        let reference_quiet = (REFERENCE_BANDS - REFERENCE_ELEVATED_BANDS.len() - REFERENCE_SEVERE_BANDS.len()) as f64;
        Self {
            width,
            height,
            band_count,
            quiet_noise: QUIET_NOISE,
            elevated_noise: ELEVATED_NOISE,
            severe_noise: SEVERE_FACTOR * ELEVATED_NOISE,
            oil_amplitude: REFERENCE_OIL_AMPLITUDE * (reference_quiet / quiet * elevated / reference_elevated).sqrt(),
            elevated_bands,
            severe_bands,
            blobs,
        }
    }

    /// Severe bands take precedence over elevated ones. Elevated bands get
    /// no oil contrast.
    pub fn build(&self) -> SceneSpec {
        let mut spec = SceneSpec::clean(self.width, self.height, self.band_count);
        spec.slick_blobs = self.blobs.clone();
        let wl = spec.wavelengths.clone().unwrap_or_default();
        for b in 0..self.band_count {
            let elevated = self.elevated_bands.contains(&b);
            spec.noise_sigma[b] = if elevated { self.elevated_noise } else { self.quiet_noise };
            spec.oil_offset[b] = if elevated { 0.0 } else { self.oil_amplitude * oil_shape(wl[b]) };
        }
        spec.with_severe_bands(&self.severe_bands, self.severe_noise)
    }
}

impl SceneSpec {
    /// The reference scene, see [`SceneRecipe::reference`].
    pub fn reference() -> Self {
        SceneRecipe::reference().build()
    }

    /// A slick-free scene with the reference spectra and uniform noise
    /// [`ELEVATED_NOISE`].
    pub fn clean(width: usize, height: usize, band_count: usize) -> Self {
        let wavelengths = wavelength_grid(band_count);
        Self {
            width,
            height,
            band_count,
            slick_blobs: Vec::new(),
            sea_signature: wavelengths.iter().map(|&wl| sea_reflectance(wl)).collect(),
            oil_offset: wavelengths
                .iter()
                .map(|&wl| REFERENCE_OIL_AMPLITUDE * oil_shape(wl))
                .collect(),
            noise_sigma: vec![ELEVATED_NOISE; band_count],
            severe_band_indices: Vec::new(),
            wavelengths: Some(wavelengths),
        }
    }

    /// Sets the noise of `bands` to `sigma` and records them as severe.
    pub fn with_severe_bands(mut self, bands: &[usize], sigma: f64) -> Self {
        for &b in bands {
            if b < self.noise_sigma.len() {
                self.noise_sigma[b] = sigma;
            }
        }
        self.severe_band_indices = bands.to_vec();
        self
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |msg: String| Err(SceneError::InvalidSpec(msg));
        if self.width < 3 || self.height < 3 {
            return bad(format!("scene {}x{} smaller than 3x3", self.width, self.height));
        }
        if self.band_count == 0 {
            return bad("band_count is zero".into());
        }
        for (name, v) in [
            ("sea_signature", &self.sea_signature),
            ("oil_offset", &self.oil_offset),
            ("noise_sigma", &self.noise_sigma),
        ] {
            if v.len() != self.band_count {
                return bad(format!("{name} has {} entries for {} bands", v.len(), self.band_count));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return bad(format!("{name} has non-finite entries"));
            }
        }
        if self.noise_sigma.iter().any(|&s| s < 0.0) {
            return bad("negative noise sigma".into());
        }
        if let Some(&b) = self.severe_band_indices.iter().find(|&&b| b >= self.band_count) {
            return bad(format!("severe band {b} out of range"));
        }
        if let Some(wl) = &self.wavelengths {
            if wl.len() != self.band_count || wl.windows(2).any(|w| w[1] <= w[0]) {
                return bad("wavelengths must be strictly increasing, one per band".into());
            }
        }
        if self
            .slick_blobs
            .iter()
            .any(|b| !(b.radius >= 0.0) || !(b.softness >= 0.0))
        {
            return bad("blob radius and softness must be non-negative".into());
        }
        Ok(())
    }

    pub fn mask(&self) -> ScalarField {
        let values = (0..self.width * self.height)
            .map(|i| {
                let (x, y) = ((i % self.width) as f64, (i / self.width) as f64);
                let m = self
                    .slick_blobs
                    .iter()
                    .map(|b| b.membership(x, y))
                    .fold(0.0, f64::max);
                if m >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        ScalarField::new(self.width, self.height, values).expect("mask sized by spec")
    }

    /// Band `b` without noise.
    pub fn clean_band(&self, mask: &ScalarField, b: usize) -> Vec<f64> {
        mask.values()
            .iter()
            .map(|&m| self.sea_signature[b] + m * self.oil_offset[b])
            .collect()
    }
}

pub fn generate_scene(
    spec: &SceneSpec,
    seed: u64,
) -> Result<(HyperspectralCube, GroundTruth), SceneError> {
    spec.validate()?;
    let mask = spec.mask();
    let bands: Vec<Vec<f64>> = (0..spec.band_count)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::substream(seed, rng::SCENE, b as u64);
            let sigma = spec.noise_sigma[b];
            let mut band = spec.clean_band(&mask, b);
            if sigma > 0.0 {
                for v in &mut band {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += sigma * z;
                }
            }
            band
        })
        .collect();
    let values = bands.concat();
    let cube = HyperspectralCube::new(
        spec.width,
        spec.height,
        spec.band_count,
        values,
        spec.wavelengths.clone(),
    )
    .map_err(|e| SceneError::InvalidSpec(e.to_string()))?;
    Ok((cube, GroundTruth { mask }))
}

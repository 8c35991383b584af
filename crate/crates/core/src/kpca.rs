//! Kernel PCA with an RBF kernel, fitted on a pixel subsample and extended
//! to every pixel through the centred kernel row (Nyström extension).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cube::{HyperspectralCube, ScalarField};

/// Pair count above which `median_bandwidth` samples pairs instead of
/// enumerating them.
pub const EXACT_MEDIAN_LIMIT: usize = 1000;
pub const SAMPLED_PAIRS: usize = 1_000_000;
/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KpcaError {
    #[error("need at least two spectra, got {0}")]
    TooFewSpectra(usize),
    #[error("median pairwise distance is zero; the sample is degenerate")]
    DegenerateSample,
    #[error("invalid kpca arguments: {0}")]
    InvalidArgument(String),
    #[error("only {achievable} of {requested} components have non-negligible eigenvalues")]
    RankDeficient {
        requested: usize,
        achievable: usize,
        model: Box<KpcaModel>,
    },
    #[error("centred Gram matrix has no positive eigenvalue")]
    NoComponents,
    #[error("expected spectra of length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Row-major collection of equal-length spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectra {
    dim: usize,
    data: Vec<f64>,
}

impl Spectra {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "data length must be a multiple of dim");
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(1, Vec::len);
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `indices` rows of a pixel-major cube buffer.
    pub fn gather(cube: &HyperspectralCube, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * cube.band_count());
        for &p in indices {
            data.extend(cube.spectrum(p));
        }
        Self::new(cube.band_count(), data)
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lower median of pairwise Euclidean distances.
pub fn median_bandwidth<R: Rng + ?Sized>(sample: &Spectra, rng: &mut R) -> Result<f64, KpcaError> {
    let m = sample.len();
    if m < 2 {
        return Err(KpcaError::TooFewSpectra(m));
    }
    let mut dists: Vec<f64> = if m <= EXACT_MEDIAN_LIMIT {
        let mut v = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in i + 1..m {
                v.push(sq_dist(sample.row(i), sample.row(j)).sqrt());
            }
        }
        v
    } else {
        (0..SAMPLED_PAIRS)
            .map(|_| {
                let i = rng.random_range(0..m);
                let mut j = rng.random_range(0..m - 1);
                if j >= i {
                    j += 1;
                }
                sq_dist(sample.row(i), sample.row(j)).sqrt()
            })
            .collect()
    };
    let mid = (dists.len() - 1) / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    if *median > 0.0 {
        Ok(*median)
    } else {
        Err(KpcaError::DegenerateSample)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpcaModel {
    subsample: Spectra,
    bandwidth: f64,
    eigenvalues: Vec<f64>,
    /// `alphas[d]` holds the M expansion coefficients of component `d`.
    alphas: Vec<Vec<f64>>,
    row_means: Vec<f64>,
    grand_mean: f64,
}

impl KpcaModel {
    pub fn components(&self) -> usize {
        self.alphas.len()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn alphas(&self) -> &[Vec<f64>] {
        &self.alphas
    }

    pub fn subsample(&self) -> &Spectra {
        &self.subsample
    }

    pub fn input_dim(&self) -> usize {
        self.subsample.dim()
    }

    fn kernel(&self, sq: f64) -> f64 {
        (-sq / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }

    /// Component scores for one spectrum, written into `out`.
    fn project_into(&self, x: &[f64], krow: &mut [f64], out: &mut [f64]) {
        let m = self.subsample.len();
        let mut mean = 0.0;
        for (i, k) in krow.iter_mut().enumerate() {
            *k = self.kernel(sq_dist(x, self.subsample.row(i)));
            mean += *k;
        }
        mean /= m as f64;
        for (k, rm) in krow.iter_mut().zip(&self.row_means) {
            *k += self.grand_mean - mean - rm;
        }
        for (o, alpha) in out.iter_mut().zip(&self.alphas) {
            *o = alpha.iter().zip(krow.iter()).map(|(a, k)| a * k).sum();
        }
    }

    pub fn project_spectrum(&self, x: &[f64]) -> Result<Vec<f64>, KpcaError> {
        if x.len() != self.input_dim() {
            return Err(KpcaError::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let mut krow = vec![0.0; self.subsample.len()];
        let mut out = vec![0.0; self.components()];
        self.project_into(x, &mut krow, &mut out);
        Ok(out)
    }

    /// Projects many spectra; rows of the result are pixels.
    pub fn project_spectra(&self, spectra: &Spectra) -> Result<Spectra, KpcaError> {
        if spectra.dim() != self.input_dim() {
            return Err(KpcaError::DimensionMismatch {
                expected: self.input_dim(),
                actual: spectra.dim(),
            });
        }
        let d = self.components();
        let mut out = vec![0.0; spectra.len() * d];
        out.par_chunks_mut(d * 256)
            .enumerate()
            .for_each_init(
                || vec![0.0; self.subsample.len()],
                |krow, (chunk, dst)| {
                    for (k, o) in dst.chunks_mut(d).enumerate() {
                        self.project_into(spectra.row(chunk * 256 + k), krow, o);
                    }
                },
            );
        Ok(Spectra::new(d, out))
    }
}

pub fn fit_kpca(sample: &Spectra, components: usize, bandwidth: f64) -> Result<KpcaModel, KpcaError> {
    let m = sample.len();
    if components == 0 || components > m {
        return Err(KpcaError::InvalidArgument(format!(
            "need 1 <= D <= M, got D={components}, M={m}"
        )));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(KpcaError::InvalidArgument(format!("bandwidth {bandwidth}")));
    }

    let denom = 2.0 * bandwidth * bandwidth;
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        gram[(i, i)] = 1.0;
        for j in i + 1..m {
            let k = (-sq_dist(sample.row(i), sample.row(j)) / denom).exp();
            gram[(i, j)] = k;
            gram[(j, i)] = k;
        }
    }
    let row_means: Vec<f64> = (0..m).map(|i| gram.row(i).sum() / m as f64).collect();
    let grand_mean = row_means.iter().sum::<f64>() / m as f64;
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] += grand_mean - row_means[i] - row_means[j];
        }
    }

    let eigen = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let lambda_max = eigen.eigenvalues[order[0]];
    if !(lambda_max > 0.0) {
        return Err(KpcaError::NoComponents);
    }

    let mut eigenvalues = Vec::new();
    let mut alphas = Vec::new();
    for &k in order.iter().take(components) {
        let lambda = eigen.eigenvalues[k];
        if lambda <= EIGEN_FLOOR * lambda_max {
            break;
        }
        let v = eigen.eigenvectors.column(k);
        // Largest-magnitude training coordinate is made positive.
        let mut pivot = 0;
        for i in 1..m {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = sign / lambda.sqrt();
        alphas.push(v.iter().map(|x| x * scale).collect());
        eigenvalues.push(lambda);
    }

    let model = KpcaModel {
        subsample: sample.clone(),
        bandwidth,
        eigenvalues,
        alphas,
        row_means,
        grand_mean,
    };
    if model.components() < components {
        return Err(KpcaError::RankDeficient {
            requested: components,
            achievable: model.components(),
            model: Box::new(model),
        });
    }
    Ok(model)
}

/// Per-pixel component scores; `plane(d)` views component `d` as an image.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedStack {
    width: usize,
    height: usize,
    pixels: Spectra,
}

impl ReducedStack {
    pub fn new(width: usize, height: usize, pixels: Spectra) -> Result<Self, KpcaError> {
        if pixels.len() != width * height {
            return Err(KpcaError::DimensionMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn components(&self) -> usize {
        self.pixels.dim()
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.len()
    }

    pub fn pixel(&self, p: usize) -> &[f64] {
        self.pixels.row(p)
    }

    pub fn pixels(&self) -> &Spectra {
        &self.pixels
    }

    pub fn plane(&self, d: usize) -> ScalarField {
        let values = (0..self.pixel_count()).map(|p| self.pixel(p)[d]).collect();
        ScalarField::new(self.width, self.height, values).expect("plane sized by stack")
    }
}

pub fn project(model: &KpcaModel, cube: &HyperspectralCube) -> Result<ReducedStack, KpcaError> {
    if cube.band_count() != model.input_dim() {
        return Err(KpcaError::DimensionMismatch {
            expected: model.input_dim(),
            actual: cube.band_count(),
        });
    }
    let spectra = Spectra::new(cube.band_count(), cube.to_pixel_major());
    let pixels = model.project_spectra(&spectra)?;
    ReducedStack::new(cube.width(), cube.height(), pixels)
}

/// Uniform subsample of `m` distinct pixel indices (all pixels if fewer),
/// returned in ascending order.
pub fn subsample_indices<R: Rng + ?Sized>(pixels: usize, m: usize, rng: &mut R) -> Vec<usize> {
    if m >= pixels {
        return (0..pixels).collect();
    }
    let mut idx = index::sample(rng, pixels, m).into_vec();
    idx.sort_unstable();
    idx
}

//! Two-class RBF soft-margin SVM with Platt-calibrated probabilities and
//! stratified k-fold grid search over `(C, gamma)`.
//!
//! The positive class (`true`) is oil throughout the pipeline.

mod platt;
mod smo;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cube::ScalarField;
use crate::kpca::{ReducedStack, Spectra};
use crate::rng::StageRng;

pub use platt::PROBABILITY_FLOOR;
use smo::KernelView;

pub const FOLDS: usize = 5;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const MAX_PAIR_UPDATES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SvmError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("SMO did not reach the KKT tolerance within {0} pair updates")]
    NoConvergence(usize),
    #[error("cross-validation needs at least 10 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid svm arguments: {0}")]
    InvalidArgument(String),
    #[error("expected {expected}-dimensional features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    /// Maximal KKT violation accepted at convergence.
    pub tolerance: f64,
    pub max_pair_updates: usize,
}

impl SvmParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self {
            c,
            gamma,
            tolerance: DEFAULT_TOLERANCE,
            max_pair_updates: MAX_PAIR_UPDATES,
        }
    }

    fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.gamma > 0.0 && self.tolerance > 0.0) {
            return Err(SvmError::InvalidArgument(format!(
                "C={}, gamma={}, tolerance={}",
                self.c, self.gamma, self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Spectra,
    /// `y_i * alpha_i` per support vector.
    pub dual_coefficients: Vec<f64>,
    /// Decision function is `sum coef_i K(sv_i, x) + bias`.
    pub bias: f64,
    pub kernel_gamma: f64,
    pub cost: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    /// Pair updates taken by the final SMO solve.
    pub iterations: usize,
}

#[inline]
fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

fn kernel_matrix(x: &Spectra, gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    k.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { 1.0 } else { rbf(x.row(i), x.row(j), gamma) };
        }
    });
    k
}

fn signs(labels: &[bool]) -> Vec<f64> {
    labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect()
}

/// Trained dual for the rows `index` of a precomputed kernel.
struct SubModel {
    index: Vec<usize>,
    coef: Vec<f64>,
    rho: f64,
    iterations: usize,
}

impl SubModel {
    fn fit(
        full: &[f64],
        n: usize,
        index: Vec<usize>,
        y: &[f64],
        params: &SvmParams,
    ) -> Result<Self, SvmError> {
        let ys: Vec<f64> = index.iter().map(|&i| y[i]).collect();
        let view = KernelView {
            full,
            n,
            index: &index,
        };
        let sol = smo::solve(&view, &ys, params.c, params.tolerance, params.max_pair_updates)?;
        let coef = sol.alpha.iter().zip(&ys).map(|(a, y)| a * y).collect();
        Ok(Self {
            index,
            coef,
            rho: sol.rho,
            iterations: sol.iterations,
        })
    }

    /// Decision value for training row `t` of the full kernel.
    fn decision(&self, full: &[f64], n: usize, t: usize) -> f64 {
        self.index
            .iter()
            .zip(&self.coef)
            .filter(|(_, &c)| c != 0.0)
            .map(|(&i, &c)| c * full[i * n + t])
            .sum::<f64>()
            - self.rho
    }
}

/// Stratified assignment of samples to `k` folds.
fn stratified_folds(labels: &[bool], k: usize, rng: &mut StageRng) -> Vec<usize> {
    let mut fold = vec![0; labels.len()];
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(rng);
        for (r, &i) in members.iter().enumerate() {
            fold[i] = r % k;
        }
    }
    fold
}

fn check_inputs(features: &Spectra, labels: &[bool]) -> Result<(), SvmError> {
    if features.len() != labels.len() {
        return Err(SvmError::InvalidArgument(format!(
            "{} feature rows for {} labels",
            features.len(),
            labels.len()
        )));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(SvmError::SingleClass);
    }
    Ok(())
}

/// Solves the dual on all samples and calibrates probabilities on
/// out-of-fold decision values (`FOLDS` stratified folds drawn from `rng`).
pub fn train_svm(
    features: &Spectra,
    labels: &[bool],
    params: &SvmParams,
    rng: &mut StageRng,
) -> Result<SvmModel, SvmError> {
    params.validate()?;
    check_inputs(features, labels)?;
    let n = features.len();
    let full = kernel_matrix(features, params.gamma);
    let y = signs(labels);

    let model = SubModel::fit(&full, n, (0..n).collect(), &y, params)?;

    // Out-of-fold decision values for the sigmoid.
    let fold = stratified_folds(labels, FOLDS.min(n), rng);
    let mut decision = vec![0.0; n];
    for f in 0..FOLDS.min(n) {
        let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
        let held: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
        let has_pos = train.iter().any(|&i| labels[i]);
        let has_neg = train.iter().any(|&i| !labels[i]);
        if has_pos && has_neg {
            let sub = SubModel::fit(&full, n, train, &y, params)?;
            for &t in &held {
                decision[t] = sub.decision(&full, n, t);
            }
        } else {
            let v = if has_pos { 1.0 } else { -1.0 };
            for &t in &held {
                decision[t] = v;
            }
        }
    }
    let (platt_a, platt_b) = platt::fit_sigmoid(&decision, labels);

    let mut sv = Vec::new();
    let mut coef = Vec::new();
    for (&i, &c) in model.index.iter().zip(&model.coef) {
        if c != 0.0 {
            sv.extend_from_slice(features.row(i));
            coef.push(c);
        }
    }
    Ok(SvmModel {
        support_vectors: Spectra::new(features.dim(), sv),
        dual_coefficients: coef,
        bias: -model.rho,
        kernel_gamma: params.gamma,
        cost: params.c,
        platt_a,
        platt_b,
        iterations: model.iterations,
    })
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.dim()
    }

    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        (0..self.support_vectors.len())
            .map(|i| self.dual_coefficients[i] * rbf(self.support_vectors.row(i), x, self.kernel_gamma))
            .sum::<f64>()
            + self.bias
    }

    fn check(&self, x: &[f64]) -> Result<(), SvmError> {
        if x.len() != self.dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        self.check(x)?;
        Ok(self.decision_unchecked(x))
    }

    /// Calibrated probability of the positive (oil) class.
    pub fn probability(&self, x: &[f64]) -> Result<f64, SvmError> {
        self.check(x)?;
        Ok(platt::sigmoid(self.decision_unchecked(x), self.platt_a, self.platt_b))
    }

    pub fn predict(&self, x: &[f64]) -> Result<bool, SvmError> {
        Ok(self.decision_value(x)? > 0.0)
    }

    pub fn probabilities(&self, data: &Spectra) -> Result<Vec<f64>, SvmError> {
        if data.dim() != self.dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim(),
                actual: data.dim(),
            });
        }
        Ok((0..data.len())
            .into_par_iter()
            .map(|p| platt::sigmoid(self.decision_unchecked(data.row(p)), self.platt_a, self.platt_b))
            .collect())
    }
}

pub fn predict_field(model: &SvmModel, data: &ReducedStack) -> Result<ScalarField, SvmError> {
    let values = model.probabilities(data.pixels())?;
    Ok(ScalarField::new(data.width(), data.height(), values).expect("one value per pixel"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvGrid {
    pub costs: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for CvGrid {
    fn default() -> Self {
        Self {
            costs: [-3, -1, 1, 3, 5, 7].iter().map(|&e| 2f64.powi(e)).collect(),
            gammas: [-7, -5, -3, -1, 1].iter().map(|&e| 2f64.powi(e)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub c: f64,
    pub gamma: f64,
    pub accuracy: f64,
    /// `(C, gamma, accuracy)` for every grid point.
    pub table: Vec<(f64, f64, f64)>,
}

/// Stratified `FOLDS`-fold accuracy for every grid point; the best point
/// wins, ties going to the smaller C and then the smaller gamma.
pub fn cross_validate(
    features: &Spectra,
    labels: &[bool],
    grid: &CvGrid,
    tolerance: f64,
    rng: &mut StageRng,
) -> Result<CvOutcome, SvmError> {
    if features.len() < 10 {
        return Err(SvmError::TooFewSamples(features.len()));
    }
    check_inputs(features, labels)?;
    if grid.costs.is_empty() || grid.gammas.is_empty() {
        return Err(SvmError::InvalidArgument("empty CV grid".into()));
    }
    let n = features.len();
    let y = signs(labels);
    let fold = stratified_folds(labels, FOLDS, rng);

    let mut costs = grid.costs.clone();
    costs.sort_by(f64::total_cmp);
    let mut gammas = grid.gammas.clone();
    gammas.sort_by(f64::total_cmp);

    let mut table = Vec::new();
    for &gamma in &gammas {
        let full = kernel_matrix(features, gamma);
        let accs: Vec<Result<(f64, f64), SvmError>> = costs
            .par_iter()
            .map(|&c| {
                let mut params = SvmParams::new(c, gamma);
                params.tolerance = tolerance;
                params.validate()?;
                let mut correct = 0usize;
                for f in 0..FOLDS {
                    let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
                    let held: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
                    let has_pos = train.iter().any(|&i| labels[i]);
                    let has_neg = train.iter().any(|&i| !labels[i]);
                    if !(has_pos && has_neg) {
                        correct += held.iter().filter(|&&t| labels[t] == has_pos).count();
                        continue;
                    }
                    let sub = SubModel::fit(&full, n, train, &y, &params)?;
                    correct += held
                        .iter()
                        .filter(|&&t| (sub.decision(&full, n, t) > 0.0) == labels[t])
                        .count();
                }
                Ok((c, correct as f64 / n as f64))
            })
            .collect();
        for acc in accs {
            let (c, a) = acc?;
            table.push((c, gamma, a));
        }
    }

    let mut best = table[0];
    for &(c, g, a) in &table {
        let better = a > best.2 || (a == best.2 && (c < best.0 || (c == best.0 && g < best.1)));
        if better {
            best = (c, g, a);
        }
    }
    Ok(CvOutcome {
        c: best.0,
        gamma: best.1,
        accuracy: best.2,
        table,
    })
}

/// Random subset helper used by tests and examples: `n` points of a 2-D
/// Gaussian blob centred at `(cx, cy)`.
pub fn gaussian_blob(rng: &mut impl Rng, n: usize, cx: f64, cy: f64, spread: f64) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n)
        .map(|_| {
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            vec![cx + spread * dx, cy + spread * dy]
        })
        .collect()
}

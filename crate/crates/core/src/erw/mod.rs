//! Extended random walker refinement.
//!
//! For each class `t` the refined map minimises
//! `P_tᵀ L P_t + gamma * aspatial_t(P_t)`, where `L` is the Laplacian of a
//! 4-connected pixel graph weighted by `exp(-beta (v_i - v_j)^2)` on a
//! guidance image and the aspatial term anchors `P_t` to the SVM priors.
//! Setting the gradient to zero gives `(L + gamma I) P_t = gamma Λ_t 1`,
//! since the two prior diagonals sum to the identity.

mod cg;

use thiserror::Error;

use crate::cube::ScalarField;

pub const DEFAULT_BETA: f64 = 710.0;
pub const DEFAULT_GAMMA: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErwError {
    #[error("invalid ERW arguments: {0}")]
    InvalidArgument(String),
    #[error("prior is {prior_w}x{prior_h} but the graph is {graph_w}x{graph_h}")]
    SizeMismatch {
        prior_w: usize,
        prior_h: usize,
        graph_w: usize,
        graph_h: usize,
    },
    #[error("conjugate gradient stopped at relative residual {residual:e} after {iterations} iterations")]
    SolverDiverged { iterations: usize, residual: f64 },
}

/// Weighted 4-neighbour lattice. `right[i]` joins pixel `i` to `i + 1`
/// (zero in the last column), `down[i]` joins `i` to `i + width` (zero in
/// the last row).
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGraph {
    width: usize,
    height: usize,
    right: Vec<f64>,
    down: Vec<f64>,
    degree: Vec<f64>,
}

/// Min-max normalises `guidance` to `[0, 1]`; a constant image maps to 0.
pub fn normalize_guidance(guidance: &ScalarField) -> ScalarField {
    match guidance.min_max() {
        Some((lo, hi)) if hi > lo => guidance.map(|v| (v - lo) / (hi - lo)),
        _ => guidance.map(|_| 0.0),
    }
}

/// Builds the graph on the min-max normalised guidance image. With `active`,
/// only edges between two active pixels are kept.
pub fn build_graph(
    guidance: &ScalarField,
    beta: f64,
    active: Option<&[bool]>,
) -> Result<PixelGraph, ErwError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(ErwError::InvalidArgument(format!("beta = {beta}")));
    }
    if let Some(a) = active {
        if a.len() != guidance.len() {
            return Err(ErwError::InvalidArgument("active mask size differs from guidance".into()));
        }
    }
    let v = normalize_guidance(guidance);
    let v = v.values();
    let (w, h) = (guidance.width(), guidance.height());
    let on = |i: usize| active.is_none_or(|a| a[i]);
    let weight = |i: usize, j: usize| {
        if on(i) && on(j) {
            (-beta * (v[i] - v[j]).powi(2)).exp()
        } else {
            0.0
        }
    };

    let n = w * h;
    let mut right = vec![0.0; n];
    let mut down = vec![0.0; n];
    let mut degree = vec![0.0; n];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                let wt = weight(i, i + 1);
                right[i] = wt;
                degree[i] += wt;
                degree[i + 1] += wt;
            }
            if y + 1 < h {
                let wt = weight(i, i + w);
                down[i] = wt;
                degree[i] += wt;
                degree[i + w] += wt;
            }
        }
    }
    Ok(PixelGraph {
        width: w,
        height: h,
        right,
        down,
        degree,
    })
}

impl PixelGraph {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    /// Weight of the edge between pixels `i` and `j` (0 if not adjacent).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        if b == a + 1 && b % self.width != 0 {
            self.right[a]
        } else if b == a + self.width {
            self.down[a]
        } else {
            0.0
        }
    }

    /// Entry `(i, j)` of the Laplacian.
    pub fn laplacian(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.degree[i]
        } else {
            -self.weight(i, j)
        }
    }

    /// `out = (L + shift I) v`.
    pub fn apply_shifted(&self, v: &[f64], shift: f64, out: &mut [f64]) {
        let w = self.width;
        for (i, o) in out.iter_mut().enumerate() {
            *o = (self.degree[i] + shift) * v[i];
        }
        for i in 0..self.len() {
            let r = self.right[i];
            if r != 0.0 {
                out[i] -= r * v[i + 1];
                out[i + 1] -= r * v[i];
            }
            let d = self.down[i];
            if d != 0.0 {
                out[i] -= d * v[i + w];
                out[i + w] -= d * v[i];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErwOptions {
    pub gamma: f64,
    /// Relative residual at which CG stops.
    pub tolerance: f64,
    /// CG iteration cap, as a multiple of the pixel count.
    pub max_iterations_per_pixel: usize,
}

impl Default for ErwOptions {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations_per_pixel: 10,
        }
    }
}

impl ErwOptions {
    pub fn with_gamma(gamma: f64) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedProbabilities {
    pub oil: ScalarField,
    pub sea: ScalarField,
    pub iterations: usize,
}

/// Solves both class systems. Priors are `initial_oil` and `1 - initial_oil`.
pub fn refine(
    initial_oil: &ScalarField,
    graph: &PixelGraph,
    options: &ErwOptions,
) -> Result<RefinedProbabilities, ErwError> {
    if initial_oil.width() != graph.width || initial_oil.height() != graph.height {
        return Err(ErwError::SizeMismatch {
            prior_w: initial_oil.width(),
            prior_h: initial_oil.height(),
            graph_w: graph.width,
            graph_h: graph.height,
        });
    }
    let gamma = options.gamma;
    if !(gamma > 0.0 && gamma.is_finite() && options.tolerance > 0.0) {
        return Err(ErwError::InvalidArgument(format!(
            "gamma = {gamma}, tolerance = {}",
            options.tolerance
        )));
    }
    let n = graph.len();
    let prior_oil = initial_oil.values();
    let prior_sea: Vec<f64> = prior_oil.iter().map(|p| 1.0 - p).collect();
    let diag: Vec<f64> = graph.degree.iter().map(|d| d + gamma).collect();
    let max_iter = options.max_iterations_per_pixel.saturating_mul(n).max(1);
    let apply = |v: &[f64], out: &mut [f64]| graph.apply_shifted(v, gamma, out);

    let norm = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>();
    // Since L 1 = 0, 1 - P_a solves the other class exactly when P_a does.
    // Solving the smaller right-hand side first means the complement already
    // meets the relative tolerance for the larger one.
    let oil_first = norm(prior_oil) <= norm(&prior_sea);
    let (first_prior, second_prior) = if oil_first {
        (prior_oil, prior_sea.as_slice())
    } else {
        (prior_sea.as_slice(), prior_oil)
    };

    let mut iterations = 0;
    let mut run = |prior: &[f64], x: &mut Vec<f64>| -> Result<(), ErwError> {
        let b: Vec<f64> = prior.iter().map(|p| gamma * p).collect();
        let out = cg::solve(apply, &diag, &b, x, options.tolerance, max_iter);
        iterations += out.iterations;
        if !out.converged {
            return Err(ErwError::SolverDiverged {
                iterations: out.iterations,
                residual: out.relative_residual,
            });
        }
        Ok(())
    };

    let mut first = first_prior.to_vec();
    run(first_prior, &mut first)?;
    let mut second: Vec<f64> = first.iter().map(|p| 1.0 - p).collect();
    run(second_prior, &mut second)?;

    let (oil, sea) = if oil_first { (first, second) } else { (second, first) };
    let (w, h) = (graph.width, graph.height);
    Ok(RefinedProbabilities {
        oil: ScalarField::new(w, h, oil).expect("sized by graph"),
        sea: ScalarField::new(w, h, sea).expect("sized by graph"),
        iterations,
    })
}

/// 1 where `P_oil > P_sea`, else 0 (ties go to sea).
pub fn argmax_map(refined: &RefinedProbabilities) -> ScalarField {
    let values = refined
        .oil
        .values()
        .iter()
        .zip(refined.sea.values())
        .map(|(o, s)| if o > s { 1.0 } else { 0.0 })
        .collect();
    ScalarField::new(refined.oil.width(), refined.oil.height(), values).expect("same shape")
}

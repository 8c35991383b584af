//! Isolation forest over reduced pixel vectors.
//!
//! Each tree isolates a random subsample of `K` points with axis-aligned
//! random splits, growing at most `floor(log2 K)` levels. A pixel's
//! probability is `2^(-A / c(K))`, with `A` its mean path length over the
//! forest; short paths (easily isolated pixels) score close to 1.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cube::ScalarField;
use crate::kpca::{ReducedStack, Spectra};
use crate::rng::{self, StageRng};

pub const EULER_GAMMA: f64 = 0.577_215_664_9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForestError {
    #[error("subsample size {sample_size} needs at least that many pixels, got {pixels}")]
    InsufficientPixels { sample_size: usize, pixels: usize },
    #[error("invalid forest parameters: {0}")]
    InvalidArgument(String),
    #[error("expected {expected}-dimensional points, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Average path length of an unsuccessful BST search among `m` points,
/// with the harmonic number approximated by `ln(m) + gamma`.
pub fn c_factor(m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let m1 = (m - 1) as f64;
    2.0 * (m1.ln() + EULER_GAMMA) - 2.0 * m1 / m as f64
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Internal {
        dim: usize,
        split: f64,
        left: usize,
        right: usize,
    },
    External {
        size: usize,
    },
}

/// Arena-allocated tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationTree {
    nodes: Vec<Node>,
}

impl IsolationTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Edges to the terminating leaf plus `c(size)` for the leaf.
    pub fn path_length(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        let mut edges = 0.0;
        loop {
            match self.nodes[idx] {
                Node::Internal {
                    dim,
                    split,
                    left,
                    right,
                } => {
                    idx = if x[dim] < split { left } else { right };
                    edges += 1.0;
                }
                Node::External { size } => return edges + c_factor(size),
            }
        }
    }

    /// Length of the longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Internal { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::External { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    fn grow(data: &Spectra, sample: &mut [usize], max_depth: usize, rng: &mut StageRng) -> Self {
        let mut tree = Self { nodes: Vec::new() };
        tree.grow_node(data, sample, 0, max_depth, rng);
        tree
    }

    fn grow_node(
        &mut self,
        data: &Spectra,
        points: &mut [usize],
        depth: usize,
        max_depth: usize,
        rng: &mut StageRng,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::External { size: points.len() });
        if points.len() <= 1 || depth >= max_depth {
            return id;
        }

        // Dimensions on which the node's points are not all equal.
        let mut spans = Vec::new();
        for d in 0..data.dim() {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
                let v = data.row(p)[d];
                (lo.min(v), hi.max(v))
            });
            if hi > lo {
                spans.push((d, lo, hi));
            }
        }
        if spans.is_empty() {
            return id;
        }

        let (dim, lo, hi) = spans[rng.random_range(0..spans.len())];
        let split = loop {
            let s = rng.random_range(lo..hi);
            if s > lo {
                break s;
            }
        };

        // Partition in place: values below the split first.
        let mut mid = 0;
        for i in 0..points.len() {
            if data.row(points[i])[dim] < split {
                points.swap(i, mid);
                mid += 1;
            }
        }
        let (lpts, rpts) = points.split_at_mut(mid);
        let left = self.grow_node(data, lpts, depth + 1, max_depth, rng);
        let right = self.grow_node(data, rpts, depth + 1, max_depth, rng);
        self.nodes[id] = Node::Internal {
            dim,
            split,
            left,
            right,
        };
        id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationForest {
    trees: Vec<IsolationTree>,
    sample_size: usize,
    dim: usize,
    c_k: f64,
}

pub const DEFAULT_TREES: usize = 800;
pub const DEFAULT_SAMPLE_SIZE: usize = 256;

/// `floor(log2 k)` for `k >= 1`.
pub fn max_height(k: usize) -> usize {
    (usize::BITS - 1 - k.leading_zeros()) as usize
}

/// Builds `trees` trees over all rows of `data`.
pub fn build_forest(
    data: &Spectra,
    trees: usize,
    sample_size: usize,
    seed: u64,
) -> Result<IsolationForest, ForestError> {
    let pool: Vec<usize> = (0..data.len()).collect();
    build_forest_from(data, &pool, trees, sample_size, seed)
}

/// Builds a forest whose subsamples are drawn from the rows listed in `pool`.
pub fn build_forest_from(
    data: &Spectra,
    pool: &[usize],
    trees: usize,
    sample_size: usize,
    seed: u64,
) -> Result<IsolationForest, ForestError> {
    if trees == 0 || sample_size < 2 {
        return Err(ForestError::InvalidArgument(format!(
            "need T >= 1 and K >= 2, got T={trees}, K={sample_size}"
        )));
    }
    if pool.len() < sample_size {
        return Err(ForestError::InsufficientPixels {
            sample_size,
            pixels: pool.len(),
        });
    }
    let max_depth = max_height(sample_size);
    let trees = (0..trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::substream(seed, rng::FOREST, t as u64);
            let mut sample: Vec<usize> = index::sample(&mut rng, pool.len(), sample_size)
                .into_iter()
                .map(|i| pool[i])
                .collect();
            IsolationTree::grow(data, &mut sample, max_depth, &mut rng)
        })
        .collect();
    Ok(IsolationForest {
        trees,
        sample_size,
        dim: data.dim(),
        c_k: c_factor(sample_size),
    })
}

impl IsolationForest {
    pub fn trees(&self) -> &[IsolationTree] {
        &self.trees
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn normalizer(&self) -> f64 {
        self.c_k
    }

    fn check(&self, x: &[f64]) -> Result<(), ForestError> {
        if x.len() != self.dim {
            return Err(ForestError::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn mean_path(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn average_path(&self, x: &[f64]) -> Result<f64, ForestError> {
        self.check(x)?;
        Ok(self.mean_path(x))
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, ForestError> {
        self.check(x)?;
        Ok(probability(self.mean_path(x), self.c_k))
    }

    pub fn score_all(&self, data: &Spectra) -> Result<Vec<f64>, ForestError> {
        if data.dim() != self.dim {
            return Err(ForestError::DimensionMismatch {
                expected: self.dim,
                actual: data.dim(),
            });
        }
        Ok((0..data.len())
            .into_par_iter()
            .map(|p| probability(self.mean_path(data.row(p)), self.c_k))
            .collect())
    }
}

/// `2^(-average_path / c_k)`.
pub fn probability(average_path: f64, c_k: f64) -> f64 {
    (-average_path / c_k).exp2()
}

pub fn score_field(forest: &IsolationForest, data: &ReducedStack) -> Result<ScalarField, ForestError> {
    let values = forest.score_all(data.pixels())?;
    Ok(ScalarField::new(data.width(), data.height(), values).expect("one score per pixel"))
}

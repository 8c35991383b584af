//! Unsupervised oil-spill detection for hyperspectral cubes.
//!
//! The pipeline screens out noisy bands, compresses spectra with kernel PCA,
//! scores pixels with an isolation forest, turns those scores into
//! pseudo-labels with 1-D k-means, trains an RBF SVM on a small labelled
//! sample, and smooths its probability map with an extended random walker.
//! See [`pipeline::run`] for the end-to-end entry point.

pub mod cube;
pub mod erw;
pub mod eval;
pub mod iforest;
pub mod io;
pub mod kpca;
pub mod labels;
pub mod noise;
pub mod pipeline;
pub mod rng;
pub mod scene;
pub mod svm;

pub use cube::{CubeError, HyperspectralCube, ScalarField};

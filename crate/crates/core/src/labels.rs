//! Pseudo-labels from the isolation probability map: 1-D two-means, oil as
//! the higher-probability cluster, and a stratified training draw.

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabelError {
    #[error("all {0} scores are identical; nothing to cluster")]
    DegenerateScores(usize),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("no pixels labelled {0}")]
    MissingClass(&'static str),
    #[error("training fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoMeans {
    /// Cluster id (0 or 1) per input value.
    pub assignments: Vec<u8>,
    pub centroids: [f64; 2],
    pub iterations: usize,
    /// Within-cluster SSE after each centroid update.
    pub objective: Vec<f64>,
}

impl TwoMeans {
    /// Within-cluster sum of squared deviations from the centroids.
    pub fn sse(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.assignments)
            .map(|(v, &a)| (v - self.centroids[a as usize]).powi(2))
            .sum()
    }
}

/// Nearest-rank percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

/// Lloyd's algorithm with k = 2 on scalar values, started from the 10th
/// and 90th percentiles (or min and max when those coincide). Cluster 0
/// always holds the lower centroid; equidistant values join cluster 0.
pub fn kmeans_two(values: &[f64]) -> Result<TwoMeans, LabelError> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) else {
        return Err(LabelError::DegenerateScores(0));
    };
    if lo == hi {
        return Err(LabelError::DegenerateScores(values.len()));
    }
    let mut centroids = [percentile(&sorted, 0.1), percentile(&sorted, 0.9)];
    if centroids[0] == centroids[1] {
        centroids = [lo, hi];
    }

    let mut result = TwoMeans {
        assignments: vec![u8::MAX; values.len()],
        centroids,
        iterations: 0,
        objective: Vec::new(),
    };
    lloyd(values, &mut result)?;

    // Lloyd can stall in a local optimum even in 1-D. The global optimum is
    // an interval split of the sorted values; restart from it if better.
    let (split_sse, split_centroids) = best_interval_split(&sorted);
    let current = result.sse(values);
    if split_sse < current - 1e-12 * current.max(1.0) {
        result.centroids = split_centroids;
        lloyd(values, &mut result)?;
    }
    Ok(result)
}

fn lloyd(values: &[f64], state: &mut TwoMeans) -> Result<(), LabelError> {
    let budget = MAX_ITERATIONS.saturating_sub(state.iterations).max(1);
    let mut pass = 0;
    while pass < budget {
        pass += 1;
        let centroids = state.centroids;
        let mut changed = false;
        let mut sums = [0.0; 2];
        let mut counts = [0usize; 2];
        for (a, &v) in state.assignments.iter_mut().zip(values) {
            let c = u8::from((v - centroids[1]).abs() < (v - centroids[0]).abs());
            if *a != c {
                *a = c;
                changed = true;
            }
            sums[c as usize] += v;
            counts[c as usize] += 1;
        }
        if !changed {
            break;
        }
        for k in 0..2 {
            if counts[k] == 0 {
                return Err(LabelError::EmptyCluster(k));
            }
            state.centroids[k] = sums[k] / counts[k] as f64;
        }
        let sse = state.sse(values);
        state.objective.push(sse);
    }
    state.iterations += pass;
    Ok(())
}

/// Minimum SSE over all splits of sorted data into a lower and an upper
/// run, with the two run means.
fn best_interval_split(sorted: &[f64]) -> (f64, [f64; 2]) {
    let n = sorted.len();
    let total: f64 = sorted.iter().sum();
    let shift = total / n as f64;
    let mut best = (f64::INFINITY, [sorted[0], sorted[n - 1]]);
    let (mut sum_l, mut sq_l) = (0.0, 0.0);
    let sq_total: f64 = sorted.iter().map(|v| (v - shift).powi(2)).sum();
    let sum_total: f64 = sorted.iter().map(|v| v - shift).sum();
    for s in 1..n {
        let v = sorted[s - 1] - shift;
        sum_l += v;
        sq_l += v * v;
        if sorted[s - 1] == sorted[s] {
            continue;
        }
        let (nl, nr) = (s as f64, (n - s) as f64);
        let sum_r = sum_total - sum_l;
        let sse = (sq_l - sum_l * sum_l / nl) + (sq_total - sq_l - sum_r * sum_r / nr);
        if sse < best.0 {
            best = (sse, [shift + sum_l / nl, shift + sum_r / nr]);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PseudoLabelSet {
    /// `true` = oil.
    pub full_labels: Vec<bool>,
    pub train_indices: Vec<usize>,
    pub train_labels: Vec<bool>,
}

impl PseudoLabelSet {
    pub fn oil_count(&self) -> usize {
        self.full_labels.iter().filter(|&&o| o).count()
    }
}

/// Oil is the cluster with the larger centroid.
pub fn assign_classes(clusters: &TwoMeans) -> Result<PseudoLabelSet, LabelError> {
    let mut counts = [0usize; 2];
    for &a in &clusters.assignments {
        counts[a as usize] += 1;
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(LabelError::EmptyCluster(k));
    }
    let oil = u8::from(clusters.centroids[1] > clusters.centroids[0]);
    Ok(PseudoLabelSet {
        full_labels: clusters.assignments.iter().map(|&a| a == oil).collect(),
        ..Default::default()
    })
}

fn class_draw<R: Rng + ?Sized>(members: &[usize], fraction: f64, rng: &mut R) -> Vec<usize> {
    let n = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len());
    let mut picked: Vec<usize> = index::sample(rng, members.len(), n)
        .into_iter()
        .map(|i| members[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Stratified draw without replacement: `round(fraction * |class|)` pixels
/// of each class (at least one), restricted to `pool` when given.
pub fn sample_training<R: Rng + ?Sized>(
    full_labels: &[bool],
    pool: Option<&[usize]>,
    fraction: f64,
    rng: &mut R,
) -> Result<PseudoLabelSet, LabelError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(LabelError::InvalidFraction(fraction));
    }
    let all: Vec<usize>;
    let pool = match pool {
        Some(p) => p,
        None => {
            all = (0..full_labels.len()).collect();
            &all
        }
    };
    let (oil, sea): (Vec<usize>, Vec<usize>) = pool.iter().partition(|&&p| full_labels[p]);
    if oil.is_empty() {
        return Err(LabelError::MissingClass("oil"));
    }
    if sea.is_empty() {
        return Err(LabelError::MissingClass("sea"));
    }
    let oil_pick = class_draw(&oil, fraction, rng);
    let sea_pick = class_draw(&sea, fraction, rng);
    let train_labels = std::iter::repeat_n(true, oil_pick.len())
        .chain(std::iter::repeat_n(false, sea_pick.len()))
        .collect();
    Ok(PseudoLabelSet {
        full_labels: full_labels.to_vec(),
        train_indices: [oil_pick, sea_pick].concat(),
        train_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive search over every 2-partition (not just interval splits).
    fn optimal_sse(values: &[f64]) -> f64 {
        let n = values.len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << n) - 1 {
            let mut sse = 0.0;
            for side in [true, false] {
                let group: Vec<f64> = (0..n)
                    .filter(|&i| ((mask >> i) & 1 == 1) == side)
                    .map(|i| values[i])
                    .collect();
                let mean = group.iter().sum::<f64>() / group.len() as f64;
                sse += group.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
            }
            best = best.min(sse);
        }
        best
    }

    #[test]
    fn small_example() {
        let v = [0.1, 0.12, 0.9];
        let km = kmeans_two(&v).unwrap();
        assert_eq!(km.assignments, vec![0, 0, 1]);
        assert!((km.centroids[0] - 0.11).abs() < 1e-15);
        assert_eq!(km.centroids[1], 0.9);
        assert!((km.sse(&v) - optimal_sse(&v)).abs() < 1e-15);
    }

    #[test]
    fn two_points() {
        let km = kmeans_two(&[0.7, 0.2]).unwrap();
        assert_eq!(km.assignments, vec![1, 0]);
        assert_eq!(km.centroids, [0.2, 0.7]);
    }

    #[test]
    fn degenerate() {
        assert_eq!(kmeans_two(&[0.3; 5]), Err(LabelError::DegenerateScores(5)));
        assert_eq!(kmeans_two(&[]), Err(LabelError::DegenerateScores(0)));
    }

    #[test]
    fn oil_is_higher_centroid_regardless_of_ids() {
        let km = TwoMeans {
            assignments: vec![0, 1, 1, 0],
            centroids: [0.3, 0.8],
            iterations: 1,
            objective: vec![],
        };
        let swapped = TwoMeans {
            assignments: vec![1, 0, 0, 1],
            centroids: [0.8, 0.3],
            iterations: 1,
            objective: vec![],
        };
        let a = assign_classes(&km).unwrap();
        assert_eq!(a.full_labels, vec![false, true, true, false]);
        assert_eq!(a, assign_classes(&swapped).unwrap());
        let empty = TwoMeans {
            assignments: vec![0, 0],
            centroids: [0.3, 0.8],
            iterations: 1,
            objective: vec![],
        };
        assert_eq!(assign_classes(&empty), Err(LabelError::EmptyCluster(1)));
    }

    #[test]
    fn stratified_counts() {
        let labels: Vec<bool> = (0..1000).map(|i| i < 200).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sample_training(&labels, None, 0.01, &mut rng).unwrap();
        assert_eq!(s.train_labels.iter().filter(|&&l| l).count(), 2);
        assert_eq!(s.train_labels.iter().filter(|&&l| !l).count(), 8);
        for (&i, &l) in s.train_indices.iter().zip(&s.train_labels) {
            assert_eq!(labels[i], l);
        }
    }

    #[test]
    fn fraction_one_takes_everything() {
        let labels: Vec<bool> = (0..50).map(|i| i % 7 == 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sample_training(&labels, None, 1.0, &mut rng).unwrap();
        let mut idx = s.train_indices.clone();
        idx.sort_unstable();
        assert_eq!(idx, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn minimum_one_per_class() {
        let labels: Vec<bool> = (0..510).map(|i| i < 10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sample_training(&labels, None, 0.01, &mut rng).unwrap();
        assert_eq!(s.train_labels.iter().filter(|&&l| l).count(), 1);
        assert_eq!(s.train_labels.iter().filter(|&&l| !l).count(), 5);
    }

    #[test]
    fn sampling_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_training(&[false; 4], None, 0.5, &mut rng),
            Err(LabelError::MissingClass("oil"))
        );
        assert_eq!(
            sample_training(&[true, false], None, 0.0, &mut rng),
            Err(LabelError::InvalidFraction(0.0))
        );
    }

    #[test]
    fn pool_restricts_draw() {
        let labels: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        let pool: Vec<usize> = (0..20).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = sample_training(&labels, Some(&pool), 1.0, &mut rng).unwrap();
        assert!(s.train_indices.iter().all(|&i| i < 20));
        assert_eq!(s.train_indices.len(), 20);
    }

    #[test]
    fn reaches_global_optimum_on_small_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let n = rng.random_range(2..=12);
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let km = kmeans_two(&v).unwrap();
            let best = optimal_sse(&v);
            worst = worst.max(km.sse(&v) - best);
        }
        assert!(worst < 1e-12, "worst excess {worst}");
    }

    proptest! {
        #[test]
        fn objective_non_increasing_and_bounded(values in prop::collection::vec(0.0f64..1.0, 2..200)) {
            prop_assume!(values.iter().any(|&v| v != values[0]));
            let km = kmeans_two(&values).unwrap();
            prop_assert!(km.iterations <= MAX_ITERATIONS);
            for w in km.objective.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
            prop_assert_eq!(km.centroids[0] < km.centroids[1], true);
        }

        #[test]
        fn stratified_sampling_exact(n_oil in 1usize..300, n_sea in 1usize..300, frac in 0.001f64..1.0, seed: u64) {
            let labels: Vec<bool> = (0..n_oil + n_sea).map(|i| i < n_oil).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sample_training(&labels, None, frac, &mut rng).unwrap();
            let want = |n: usize| ((frac * n as f64).round() as usize).clamp(1, n);
            prop_assert_eq!(s.train_labels.iter().filter(|&&l| l).count(), want(n_oil));
            prop_assert_eq!(s.train_labels.iter().filter(|&&l| !l).count(), want(n_sea));
            let mut idx = s.train_indices.clone();
            idx.sort_unstable();
            idx.dedup();
            prop_assert_eq!(idx.len(), s.train_indices.len());
        }
    }
}

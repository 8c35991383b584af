//! Scores a Gaussian cloud with one planted outlier and prints the most
//! isolated points.

use oilspill::iforest;
use oilspill::kpca::Spectra;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut rows: Vec<Vec<f64>> = (0..2000)
        .map(|_| (0..4).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    rows.push(vec![6.0, -6.0, 6.0, -6.0]);
    let data = Spectra::from_rows(&rows);

    let forest = iforest::build_forest(&data, iforest::DEFAULT_TREES, iforest::DEFAULT_SAMPLE_SIZE, 11)?;
    let scores = forest.score_all(&data)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    println!("c(K) = {:.4}, max depth {}", forest.normalizer(), iforest::max_height(forest.sample_size()));
    for &i in &order[..5] {
        println!("row {i:4}: p = {:.4}  mean path {:.3}", scores[i], forest.average_path(data.row(i))?);
    }
    Ok(())
}

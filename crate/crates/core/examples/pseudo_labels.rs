//! Splits isolation scores into two clusters and draws a stratified 1%
//! training set from them.

use oilspill::labels;
use oilspill::rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let sea = Normal::new(0.42, 0.02)?;
    let oil = Normal::new(0.58, 0.03)?;
    let scores: Vec<f64> = (0..20_000)
        .map(|i| if i % 10 == 0 { oil.sample(&mut r) } else { sea.sample(&mut r) })
        .collect();

    let clusters = labels::kmeans_two(&scores)?;
    println!("centroids {:?} after {} iterations", clusters.centroids, clusters.iterations);
    let classes = labels::assign_classes(&clusters)?;
    println!("oil cluster holds {} of {} pixels", classes.oil_count(), scores.len());

    let training = labels::sample_training(&classes.full_labels, None, 0.01, &mut rng::stage(0, rng::SAMPLING))?;
    let oil_train = training.train_labels.iter().filter(|&&o| o).count();
    println!(
        "training set: {} pixels ({} oil, {} sea)",
        training.train_indices.len(),
        oil_train,
        training.train_labels.len() - oil_train
    );
    Ok(())
}

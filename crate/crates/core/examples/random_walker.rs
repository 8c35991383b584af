//! Refines a salt-and-pepper probability map with the extended random
//! walker, guided by a clean image of the same square.

use oilspill::cube::ScalarField;
use oilspill::erw::{self, ErwOptions};
use oilspill::eval;
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 64;
    let inside = |i: usize| (16..48).contains(&(i % n)) && (16..48).contains(&(i / n));
    let truth = ScalarField::new(n, n, (0..n * n).map(|i| if inside(i) { 1.0 } else { 0.0 }).collect())?;

    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let prior: Vec<f64> = (0..n * n)
        .map(|i| {
            let base = if inside(i) { 0.7 } else { 0.3 };
            (base + r.random_range(-0.35..0.35f64)).clamp(0.01, 0.99)
        })
        .collect();
    let prior = ScalarField::new(n, n, prior)?;

    let graph = erw::build_graph(&truth, erw::DEFAULT_BETA, None)?;
    let refined = erw::refine(&prior, &graph, &ErwOptions::default())?;
    let before = prior.map(|p| if p > 0.5 { 1.0 } else { 0.0 });
    let after = erw::argmax_map(&refined);

    println!("CG iterations: {}", refined.iterations);
    for (name, map) in [("prior", &before), ("refined", &after)] {
        let report = eval::dp(map, &truth)?;
        println!(
            "{name:8}: DP {:.3}  isolated positives {}",
            report.dp,
            eval::isolated_positives(map)
        );
    }
    Ok(())
}

//! Fits kernel PCA on a pixel subsample of the reference scene and reports
//! how well each leading component separates oil from sea.

use oilspill::kpca::{self, Spectra};
use oilspill::{eval, noise, rng, scene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = 1;
    let (cube, truth) = scene::generate_scene(&scene::SceneSpec::reference(), seed)?;
    let (cube, _) = noise::screen_bands(&cube)?;

    let picks = kpca::subsample_indices(cube.pixel_count(), 1000, &mut rng::stage(seed, rng::KPCA_SUBSAMPLE));
    let sample = Spectra::gather(&cube, &picks);
    let bandwidth = kpca::median_bandwidth(&sample, &mut rng::stage(seed, rng::BANDWIDTH_PAIRS))?;
    let model = kpca::fit_kpca(&sample, 8, bandwidth)?;
    let stack = kpca::project(&model, &cube)?;

    println!("bandwidth {bandwidth:.5}");
    for d in 0..model.components() {
        let auc = eval::auc(&stack.plane(d), &truth.mask)?;
        println!(
            "component {d}: eigenvalue {:9.4}  oil/sea AUC {:.3}",
            model.eigenvalues()[d],
            auc.max(1.0 - auc)
        );
    }
    Ok(())
}

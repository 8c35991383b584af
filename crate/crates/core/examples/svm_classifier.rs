//! Grid-searches an RBF SVM on two overlapping clouds, then prints
//! calibrated probabilities along the line joining them.

use oilspill::kpca::Spectra;
use oilspill::rng;
use oilspill::svm::{self, CvGrid, SvmParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut r = rng::stage(2, "example");
    let mut rows = svm::gaussian_blob(&mut r, 150, -1.0, 0.0, 0.8);
    rows.extend(svm::gaussian_blob(&mut r, 150, 1.0, 0.0, 0.8));
    let labels: Vec<bool> = (0..300).map(|i| i >= 150).collect();
    let features = Spectra::from_rows(&rows);

    let cv = svm::cross_validate(&features, &labels, &CvGrid::default(), svm::DEFAULT_TOLERANCE, &mut rng::stage(2, rng::CV_FOLDS))?;
    println!("best C = {}, gamma = {}, accuracy {:.3}", cv.c, cv.gamma, cv.accuracy);

    let model = svm::train_svm(&features, &labels, &SvmParams::new(cv.c, cv.gamma), &mut rng::stage(2, rng::PLATT_SPLIT))?;
    println!("{} support vectors", model.support_vectors.len());
    for x in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
        println!("x = {x:5.1}: P(positive) = {:.3}", model.probability(&[x, 0.0])?);
    }
    Ok(())
}

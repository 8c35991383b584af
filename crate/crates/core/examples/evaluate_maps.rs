//! AUC and detection precision on a hand-made example.

use oilspill::cube::ScalarField;
use oilspill::eval;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = ScalarField::new(4, 2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0])?;
    let scores = ScalarField::new(4, 2, vec![0.9, 0.8, 0.4, 0.3, 0.7, 0.7, 0.7, 0.1])?;
    let detection = scores.map(|s| if s > 0.5 { 1.0 } else { 0.0 });

    let report = eval::evaluate(&scores, &detection, &truth, None)?;
    println!("AUC {:.4}", report.auc.unwrap_or(f64::NAN));
    println!("DP  {:.4}  {:?}", report.dp, report.counts);
    println!("AUC of reversed scores {:.4}", eval::auc(&scores.map(|s| -s), &truth)?);
    Ok(())
}

//! Runs the whole detector on the synthetic reference scene and prints the
//! chosen parameters, metrics and stage timings.
//!
//! ```text
//! cargo run --release --example full_pipeline -- [seed] [threads]
//! ```

use oilspill::pipeline::{self, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let threads = args.next().map(|s| s.parse()).transpose()?;
    let config = PipelineConfig {
        seed,
        threads,
        ..PipelineConfig::default()
    };
    let run = pipeline::run(&config)?;

    if let Some(noise) = &run.noise_report {
        println!("bands kept: {} of {}", noise.kept.len(), noise.sigma.len());
    }
    let p = &run.params;
    println!(
        "kpca bandwidth {:.4}, svm C = {}, gamma = {} (cv accuracy {:.4}), {} training pixels",
        p.kpca_bandwidth, p.svm_c, p.svm_gamma, p.cv_accuracy, p.training_pixels
    );
    if let Some(r) = run.eval_report {
        println!(
            "AUC {:.4}  DP {:.4}  TP {} FP {} TN {} FN {}",
            r.auc.unwrap_or(f64::NAN),
            r.dp,
            r.counts.tp,
            r.counts.fp,
            r.counts.tn,
            r.counts.fn_
        );
    }
    for (stage, secs) in &run.timings.stages {
        println!("{stage:>12}: {secs:7.3} s");
    }
    println!("{:>12}: {:7.3} s", "total", run.timings.total_seconds);
    Ok(())
}

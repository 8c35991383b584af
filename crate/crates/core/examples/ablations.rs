//! Runs the band-screen and random-walker ablations on the reference scene.
//!
//! ```text
//! cargo run --release --example ablations -- [seed]
//! ```

use oilspill::pipeline::{self, AblationSwitch, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let config = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    for switch in [AblationSwitch::BandScreen, AblationSwitch::Erw] {
        let r = pipeline::run_ablation(&config, switch)?;
        println!(
            "{switch:?}: AUC {:.4} vs {:.4} (delta {:+.4}), DP {:.4} vs {:.4}, isolated positives {} vs {}",
            r.with.auc.unwrap_or(f64::NAN),
            r.without.auc.unwrap_or(f64::NAN),
            r.auc_delta,
            r.with.dp,
            r.without.dp,
            r.isolated_with,
            r.isolated_without
        );
    }
    Ok(())
}

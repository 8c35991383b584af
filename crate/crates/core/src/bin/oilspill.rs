use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oilspill::io::read_float_raster;
use oilspill::pipeline::{self, PipelineConfig};
use oilspill::eval;

#[derive(Parser)]
#[command(version, about = "Unsupervised oil-spill detection for hyperspectral cubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detector described by a config file.
    Detect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        skip_band_screen: bool,
        #[arg(long)]
        skip_erw: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the configured synthetic scene as ENVI plus its truth mask.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score float rasters against a reference mask.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        detection: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), Box<dyn std::error::Error>> {
    match command {
        Command::Detect {
            config,
            seed,
            skip_band_screen,
            skip_erw,
            threads,
            out,
        } => {
            let mut c = PipelineConfig::load(&config)?;
            if let Some(s) = seed {
                c.seed = s;
            }
            c.skip_band_screen |= skip_band_screen;
            c.skip_erw |= skip_erw;
            c.threads = threads.or(c.threads);
            c.output_dir = out.or(c.output_dir);
            let run = pipeline::run(&c)?;
            match run.eval_report {
                Some(r) => println!("{}", serde_json::to_string(&r)?),
                None => println!("detected {} oil pixels", run.detection.values().iter().filter(|&&v| v != 0.0).count()),
            }
        }
        Command::Synth { config, out } => {
            let written = pipeline::synthesize(&PipelineConfig::load(&config)?, &out)?;
            println!("{}", written.header.display());
        }
        Command::Eval {
            scores,
            detection,
            truth,
        } => {
            let load = |p: &Path| read_float_raster(p).map_err(|e| format!("eval: {e}"));
            let report = eval::evaluate(&load(&scores)?, &load(&detection)?, &load(&truth)?, None)
                .map_err(|e| format!("eval: {e}"))?;
            println!("{}", serde_json::to_string(&report)?);
        }
    }
    Ok(())
}

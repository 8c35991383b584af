use std::path::Path;

use oilspill::cube::ScalarField;
use oilspill::pipeline::{self, AblationSwitch, InputSource, PipelineConfig, Stage};
use oilspill::scene::{self, SceneRecipe, SceneSpec};
use oilspill::{io, noise};

fn small_config(seed: u64) -> PipelineConfig {
    PipelineConfig {
        input: InputSource::Scene(SceneRecipe::sized(64, 64, 40).build()),
        trees: 200,
        seed,
        ..PipelineConfig::default()
    }
}

#[test]
fn erw_off_view_matches_a_skip_erw_run() {
    let config = small_config(5);
    let full = pipeline::run(&config).unwrap();
    let view = pipeline::erw_off_view(&full).unwrap();
    let real = pipeline::run(&PipelineConfig {
        skip_erw: true,
        ..config
    })
    .unwrap();

    assert_eq!(view.score_map, real.score_map);
    assert_eq!(view.initial_map, real.initial_map);
    assert_eq!(view.refined, real.refined);
    assert_eq!(view.detection, real.detection);
    assert_eq!(view.eval_report, real.eval_report);
    assert_eq!(view.params, real.params);
}

#[test]
fn ablation_reports_both_sides() {
    let r = pipeline::run_ablation(&small_config(2), AblationSwitch::Erw).unwrap();
    let (on, off) = (r.with.auc.unwrap(), r.without.auc.unwrap());
    assert!((r.auc_delta - (on - off)).abs() < 1e-15);
    assert!(r.isolated_with <= r.isolated_without);
}

#[test]
fn artifacts_reload_and_match() {
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig {
        output_dir: Some(dir.path().to_path_buf()),
        ..small_config(1)
    };
    let run = pipeline::run(&config).unwrap();
    let as_f32 = |f: &ScalarField| f.map(|v| v as f32 as f64);
    for (name, field) in [
        ("scores", &run.score_map),
        ("initial", &run.initial_map),
        ("refined", &run.refined),
        ("detection", &run.detection),
    ] {
        let back = io::read_float_raster(&dir.path().join(format!("{name}.f32"))).unwrap();
        assert_eq!(back, as_f32(field), "{name}");
        assert!(dir.path().join(format!("{name}.pgm")).exists());
    }
    assert!(run.detection.values().iter().all(|&v| v == 0.0 || v == 1.0));

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    let report = run.eval_report.unwrap();
    assert_eq!(metrics["auc"].as_f64(), report.auc);
    assert_eq!(metrics["dp"].as_f64(), Some(report.dp));
    assert_eq!(metrics["counts"]["fn"].as_u64(), Some(report.counts.fn_));
    assert_eq!(metrics["params"]["seed"].as_u64(), Some(1));
    let timings: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("timings.json")).unwrap()).unwrap();
    assert!(timings["total_seconds"].as_f64().unwrap() > 0.0);
}

#[test]
fn water_mask_restricts_detection_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (w, h) = (64, 64);
    let water: Vec<f64> = (0..w * h).map(|i| if i % w < 56 { 1.0 } else { 0.0 }).collect();
    let mask_path = dir.path().join("water.f32");
    io::write_float_raster(&ScalarField::new(w, h, water.clone()).unwrap(), &mask_path).unwrap();

    let run = pipeline::run(&PipelineConfig {
        water_mask: Some(mask_path),
        ..small_config(4)
    })
    .unwrap();
    let water_pixels = water.iter().filter(|&&v| v != 0.0).count() as u64;
    assert_eq!(run.eval_report.unwrap().counts.total(), water_pixels);
    for (d, m) in run.detection.values().iter().zip(&water) {
        if *m == 0.0 {
            assert_eq!(*d, 0.0);
        }
    }
}

#[test]
fn failing_stage_keeps_earlier_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let empty_truth = dir.path().join("truth.f32");
    io::write_float_raster(&ScalarField::filled(64, 64, 0.0), &empty_truth).unwrap();

    let err = pipeline::run(&PipelineConfig {
        reference_mask: Some(empty_truth),
        output_dir: Some(out.clone()),
        ..small_config(0)
    })
    .unwrap_err();
    assert_eq!(err.stage, Stage::Eval);
    for name in ["scores", "initial", "refined", "detection"] {
        assert!(out.join(format!("{name}.f32")).exists(), "{name}");
    }
    assert!(!out.join("metrics.json").exists());
}

#[test]
fn envi_input_with_reference_mask() {
    let dir = tempfile::tempdir().unwrap();
    let synth_config = small_config(8);
    let files = pipeline::synthesize(&synth_config, dir.path()).unwrap();

    let text = format!(
        "input = envi\nheader = {}\nreference_mask = truth.f32\nT = 200\nseed = 8\n",
        files.header.file_name().unwrap().to_string_lossy()
    );
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, text).unwrap();
    let from_file = pipeline::run(&PipelineConfig::load(&cfg_path).unwrap()).unwrap();
    let from_scene = pipeline::run(&synth_config).unwrap();

    // The file holds f32 samples, so only the quality is compared.
    let (a, b) = (from_file.eval_report.unwrap(), from_scene.eval_report.unwrap());
    assert!(a.auc.unwrap() > 0.9 && b.auc.unwrap() > 0.9, "{a:?} {b:?}");
}

#[test]
fn missing_header_fails_at_load() {
    let err = pipeline::run(&PipelineConfig {
        input: InputSource::Envi(Path::new("/nonexistent/scene.hdr").to_path_buf()),
        ..PipelineConfig::default()
    })
    .unwrap_err();
    assert_eq!(err.stage, Stage::Load);
    assert!(err.to_string().starts_with("load: "));
}

#[test]
fn single_severe_band_stands_out() {
    let spec = SceneSpec::clean(64, 64, 8).with_severe_bands(&[3], 50.0 * scene::ELEVATED_NOISE);
    let (cube, _) = scene::generate_scene(&spec, 0).unwrap();
    let sigma = noise::band_noise_levels(&cube);
    assert!((0..8).filter(|&b| b != 3).all(|b| sigma[3] > sigma[b]));
}

#[test]
fn scene_truth_covers_about_a_tenth() {
    let (cube, truth) = scene::generate_scene(&SceneSpec::reference(), 0).unwrap();
    assert_eq!((cube.width(), cube.height(), cube.band_count()), (256, 256, 100));
    assert_eq!(SceneSpec::reference().severe_band_indices.len(), 20);
    let f = truth.oil_fraction();
    assert!((0.08..=0.12).contains(&f), "{f}");
}

#[test]
fn reference_scene_is_seed_deterministic() {
    let spec = SceneRecipe::sized(32, 32, 10).build();
    let (a, _) = scene::generate_scene(&spec, 9).unwrap();
    let (b, _) = scene::generate_scene(&spec, 9).unwrap();
    let (c, _) = scene::generate_scene(&spec, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

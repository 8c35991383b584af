//! End-to-end detection: band screening, kernel PCA, isolation-forest
//! scoring, k-means pseudo-labels, SVM classification and random-walker
//! refinement, followed by evaluation when a reference mask is available.
//!
//! Artifacts are written to `output_dir` as soon as each stage produces them,
//! so a failing run leaves everything computed up to the failure on disk.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::cube::{HyperspectralCube, ScalarField};
use crate::erw::{self, ErwOptions};
use crate::eval::{self, EvalReport};
use crate::iforest;
use crate::io::{self, keyvalue::{split_list, KeyValueError, KeyValues}};
use crate::kpca::{self, KpcaError, Spectra};
use crate::labels;
use crate::noise::{self, NoiseReport};
use crate::rng;
use crate::scene::{self, Blob, SceneRecipe, SceneSpec};
use crate::svm::{self, CvGrid, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Load,
    BandScreen,
    Kpca,
    Forest,
    PseudoLabel,
    Svm,
    Erw,
    Eval,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::BandScreen => "band-screen",
            Stage::Kpca => "kpca",
            Stage::Forest => "iforest",
            Stage::PseudoLabel => "pseudo-label",
            Stage::Svm => "svm",
            Stage::Erw => "erw",
            Stage::Eval => "eval",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl PipelineError {
    pub fn new(stage: Stage, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        Self {
            stage,
            source: source.into(),
        }
    }
}

fn at<E: Into<Box<dyn std::error::Error + Send + Sync>>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// Generate a synthetic scene; its planted mask is the reference.
    Scene(SceneSpec),
    /// ENVI header path.
    Envi(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: InputSource,
    /// Float raster, nonzero = oil. Overrides a synthetic scene's own mask.
    pub reference_mask: Option<PathBuf>,
    /// Float raster, nonzero = water. Restricts every stage to water pixels.
    pub water_mask: Option<PathBuf>,
    pub components: usize,
    pub trees: usize,
    pub sample_size: usize,
    pub train_fraction: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kpca_subsample: usize,
    /// KPCA component used as the ERW guidance image.
    pub guidance_component: usize,
    pub seed: u64,
    pub skip_band_screen: bool,
    pub skip_erw: bool,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub cv_grid: CvGrid,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: InputSource::Scene(SceneSpec::reference()),
            reference_mask: None,
            water_mask: None,
            components: 25,
            trees: iforest::DEFAULT_TREES,
            sample_size: iforest::DEFAULT_SAMPLE_SIZE,
            train_fraction: 0.01,
            beta: erw::DEFAULT_BETA,
            gamma: erw::DEFAULT_GAMMA,
            kpca_subsample: 1000,
            guidance_component: 0,
            seed: 0,
            skip_band_screen: false,
            skip_erw: false,
            output_dir: None,
            threads: None,
            cv_grid: CvGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Syntax(#[from] KeyValueError),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: `{value}`")]
    BadValue { key: String, value: String },
    #[error("`{0}` is required")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

const KEYS: &[&str] = &[
    "input",
    "header",
    "reference_mask",
    "water_mask",
    "d",
    "t",
    "k",
    "train_fraction",
    "beta",
    "gamma",
    "kpca_subsample",
    "guidance_component",
    "seed",
    "skip_band_screen",
    "skip_erw",
    "output_dir",
    "threads",
    "cv_costs",
    "cv_gammas",
    "scene.width",
    "scene.height",
    "scene.bands",
    "scene.quiet_noise",
    "scene.elevated_noise",
    "scene.severe_noise",
    "scene.oil_amplitude",
    "scene.elevated_bands",
    "scene.severe_bands",
    "scene.blobs",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

fn parse_flag(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        }),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    split_list(value).into_iter().map(|v| parse_value(key, v)).collect()
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value.trim());
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

/// Scene from `scene.*` keys layered over [`SceneRecipe::sized`].
fn scene_from(kv: &KeyValues) -> Result<SceneSpec, ConfigError> {
    fn opt<T: std::str::FromStr>(kv: &KeyValues, key: &str) -> Result<Option<T>, ConfigError> {
        kv.get(key).map(|v| parse_value(key, v)).transpose()
    }
    let width = opt(kv, "scene.width")?.unwrap_or(scene::REFERENCE_SIZE);
    let height = opt(kv, "scene.height")?.unwrap_or(scene::REFERENCE_SIZE);
    let bands = opt(kv, "scene.bands")?.unwrap_or(scene::REFERENCE_BANDS);
    let mut r = SceneRecipe::sized(width, height, bands);
    if let Some(v) = opt(kv, "scene.quiet_noise")? {
        r.quiet_noise = v;
    }
    if let Some(v) = opt(kv, "scene.elevated_noise")? {
        r.elevated_noise = v;
    }
    if let Some(v) = opt(kv, "scene.severe_noise")? {
        r.severe_noise = v;
    }
    if let Some(v) = opt(kv, "scene.oil_amplitude")? {
        r.oil_amplitude = v;
    }
    if let Some(v) = kv.get("scene.elevated_bands") {
        r.elevated_bands = parse_list("scene.elevated_bands", v)?;
    }
    if let Some(v) = kv.get("scene.severe_bands") {
        r.severe_bands = parse_list("scene.severe_bands", v)?;
    }
    if let Some(v) = kv.get("scene.blobs") {
        r.blobs = split_list(v)
            .into_iter()
            .map(|b| {
                let f: Vec<f64> = b
                    .split_whitespace()
                    .map(|x| parse_value("scene.blobs", x))
                    .collect::<Result<_, _>>()?;
                match f[..] {
                    [x, y, r, s] => Ok(Blob::new(x, y, r, s)),
                    [x, y, r] => Ok(Blob::new(x, y, r, 0.0)),
                    _ => Err(ConfigError::BadValue {
                        key: "scene.blobs".into(),
                        value: b.into(),
                    }),
                }
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(&b) = r.elevated_bands.iter().chain(&r.severe_bands).find(|&&b| b >= bands) {
        return Err(ConfigError::Invalid(format!("band {b} out of range for {bands} bands")));
    }
    let spec = r.build();
    spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(spec)
}

impl PipelineConfig {
    /// Parses flat `key = value` text. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let kv = KeyValues::parse(text)?;
        if let Some(k) = kv.keys().find(|k| !KEYS.contains(k)) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        let mut c = Self::default();
        let input = kv.get("input").unwrap_or("scene").trim().to_ascii_lowercase();
        c.input = match input.as_str() {
            "scene" => InputSource::Scene(scene_from(&kv)?),
            "envi" => InputSource::Envi(resolve(base, kv.get("header").ok_or(ConfigError::Missing("header"))?)),
            _ => {
                return Err(ConfigError::BadValue {
                    key: "input".into(),
                    value: input,
                })
            }
        };
        for (key, value) in kv.keys().map(|k| (k, kv.get(k).unwrap_or_default())) {
            match key {
                "reference_mask" => c.reference_mask = Some(resolve(base, value)),
                "water_mask" => c.water_mask = Some(resolve(base, value)),
                "output_dir" => c.output_dir = Some(resolve(base, value)),
                "d" => c.components = parse_value(key, value)?,
                "t" => c.trees = parse_value(key, value)?,
                "k" => c.sample_size = parse_value(key, value)?,
                "train_fraction" => c.train_fraction = parse_value(key, value)?,
                "beta" => c.beta = parse_value(key, value)?,
                "gamma" => c.gamma = parse_value(key, value)?,
                "kpca_subsample" => c.kpca_subsample = parse_value(key, value)?,
                "guidance_component" => c.guidance_component = parse_value(key, value)?,
                "seed" => c.seed = parse_value(key, value)?,
                "threads" => c.threads = Some(parse_value(key, value)?),
                "skip_band_screen" => c.skip_band_screen = parse_flag(key, value)?,
                "skip_erw" => c.skip_erw = parse_flag(key, value)?,
                "cv_costs" => c.cv_grid.costs = parse_list(key, value)?,
                "cv_gammas" => c.cv_grid.gammas = parse_list(key, value)?,
                _ => {}
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::new(Stage::Config, io::IoError::io(path, e)))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(at(Stage::Config))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("d", self.components),
            ("t", self.trees),
            ("k", self.sample_size),
            ("kpca_subsample", self.kpca_subsample),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::Invalid(format!("`{name}` must be positive")));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::Invalid("`threads` must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(ConfigError::Invalid(format!("train_fraction {} not in (0, 1]", self.train_fraction)));
        }
        if !(self.beta > 0.0 && self.gamma > 0.0 && self.beta.is_finite() && self.gamma.is_finite()) {
            return Err(ConfigError::Invalid("beta and gamma must be positive".into()));
        }
        if self.cv_grid.costs.is_empty() || self.cv_grid.gammas.is_empty() {
            return Err(ConfigError::Invalid("empty CV grid".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub stages: Vec<(Stage, f64)>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChosenParams {
    pub components: usize,
    pub kpca_bandwidth: f64,
    pub trees: usize,
    pub sample_size: usize,
    pub train_fraction: f64,
    /// Pixels in the k-means oil cluster.
    pub pseudo_oil_pixels: usize,
    pub training_pixels: usize,
    pub svm_c: f64,
    pub svm_gamma: f64,
    pub cv_accuracy: f64,
    pub beta: f64,
    pub gamma: f64,
    pub seed: u64,
    pub skip_band_screen: bool,
    pub skip_erw: bool,
    pub erw_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    /// `None` when band screening was skipped.
    pub noise_report: Option<NoiseReport>,
    /// Isolation probability `p`.
    pub score_map: ScalarField,
    /// SVM oil probability `O`.
    pub initial_map: ScalarField,
    /// Refined oil probability; equals `initial_map` when ERW is skipped.
    pub refined: ScalarField,
    /// Binary detection map.
    pub detection: ScalarField,
    pub eval_report: Option<EvalReport>,
    pub params: ChosenParams,
    pub timings: Timings,
    /// Water pixels when a water mask was supplied.
    pub active: Option<Vec<bool>>,
    pub reference: Option<ScalarField>,
}

#[derive(Serialize)]
struct Metrics<'a> {
    noise: Option<&'a NoiseReport>,
    params: &'a ChosenParams,
    auc: Option<f64>,
    dp: Option<f64>,
    counts: Option<&'a eval::Counts>,
    no_positive: Option<bool>,
}

struct Writer<'a> {
    dir: Option<&'a Path>,
}

impl Writer<'_> {
    fn map(&self, name: &str, field: &ScalarField, range: Option<(f64, f64)>) -> Result<(), PipelineError> {
        let Some(dir) = self.dir else { return Ok(()) };
        io::write_float_raster(field, &dir.join(format!("{name}.f32"))).map_err(at(Stage::Output))?;
        let (lo, hi) = range.or_else(|| field.min_max()).unwrap_or((0.0, 1.0));
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo, lo + 1.0) };
        io::write_gray_pgm(field, lo, hi, &dir.join(format!("{name}.pgm"))).map_err(at(Stage::Output))
    }

    fn json(&self, name: &str, value: &impl Serialize) -> Result<(), PipelineError> {
        let Some(dir) = self.dir else { return Ok(()) };
        let path = dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(at(Stage::Output))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| PipelineError::new(Stage::Output, io::IoError::io(&path, e)))
    }
}

fn load_mask(path: &Path, cube: &HyperspectralCube, stage: Stage) -> Result<ScalarField, PipelineError> {
    let field = io::read_float_raster(path).map_err(at(stage))?;
    if field.width() != cube.width() || field.height() != cube.height() {
        return Err(PipelineError::new(
            stage,
            format!(
                "mask {} is {}x{}, cube is {}x{}",
                path.display(),
                field.width(),
                field.height(),
                cube.width(),
                cube.height()
            ),
        ));
    }
    Ok(field)
}

/// Runs the pipeline, inside a dedicated thread pool when `threads` is set.
pub fn run(config: &PipelineConfig) -> Result<RunArtifacts, PipelineError> {
    config.validate().map_err(at(Stage::Config))?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(at(Stage::Config))?
            .install(|| run_stages(config)),
        None => run_stages(config),
    }
}

struct Clock {
    start: Instant,
    last: Instant,
    timings: Timings,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            timings: Timings::default(),
        }
    }

    fn lap(&mut self, stage: Stage) {
        let now = Instant::now();
        self.timings.stages.push((stage, (now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn finish(mut self) -> Timings {
        self.timings.total_seconds = self.start.elapsed().as_secs_f64();
        self.timings
    }
}

fn run_stages(config: &PipelineConfig) -> Result<RunArtifacts, PipelineError> {
    let mut clock = Clock::new();
    let out = Writer {
        dir: config.output_dir.as_deref(),
    };
    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::new(Stage::Output, io::IoError::io(dir, e)))?;
    }

    let (cube, mut reference) = match &config.input {
        InputSource::Scene(spec) => {
            let (cube, truth) = scene::generate_scene(spec, config.seed).map_err(at(Stage::Load))?;
            (cube, Some(truth.mask))
        }
        InputSource::Envi(path) => (io::read_envi(path).map_err(at(Stage::Load))?, None),
    };
    if let Some(path) = &config.reference_mask {
        reference = Some(load_mask(path, &cube, Stage::Load)?);
    }
    let active: Option<Vec<bool>> = match &config.water_mask {
        Some(path) => Some(load_mask(path, &cube, Stage::Load)?.values().iter().map(|&v| v != 0.0).collect()),
        None => None,
    };
    let pool: Vec<usize> = match &active {
        Some(a) => (0..a.len()).filter(|&i| a[i]).collect(),
        None => (0..cube.pixel_count()).collect(),
    };
    let (w, h) = (cube.width(), cube.height());
    clock.lap(Stage::Load);

    let (cube, noise_report) = if config.skip_band_screen {
        (cube, None)
    } else {
        let (screened, report) = noise::screen_bands(&cube).map_err(at(Stage::BandScreen))?;
        log::info!("band screen kept {} of {} bands", report.kept.len(), report.sigma.len());
        (screened, Some(report))
    };
    clock.lap(Stage::BandScreen);

    let mut sub_rng = rng::stage(config.seed, rng::KPCA_SUBSAMPLE);
    let picks: Vec<usize> = kpca::subsample_indices(pool.len(), config.kpca_subsample, &mut sub_rng)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    let sample = Spectra::gather(&cube, &picks);
    let bandwidth = kpca::median_bandwidth(&sample, &mut rng::stage(config.seed, rng::BANDWIDTH_PAIRS))
        .map_err(at(Stage::Kpca))?;
    let model = match kpca::fit_kpca(&sample, config.components, bandwidth) {
        Ok(m) => m,
        Err(KpcaError::RankDeficient {
            requested,
            achievable,
            model,
        }) => {
            log::warn!("kpca: only {achievable} of {requested} components available; continuing");
            *model
        }
        Err(e) => return Err(PipelineError::new(Stage::Kpca, e)),
    };
    let stack = kpca::project(&model, &cube).map_err(at(Stage::Kpca))?;
    drop(cube);
    clock.lap(Stage::Kpca);

    let forest = iforest::build_forest_from(stack.pixels(), &pool, config.trees, config.sample_size, config.seed)
        .map_err(at(Stage::Forest))?;
    let mut score_map = iforest::score_field(&forest, &stack).map_err(at(Stage::Forest))?;
    drop(forest);
    if let Some(a) = &active {
        score_map = masked(&score_map, a);
    }
    out.map("scores", &score_map, Some((0.0, 1.0)))?;
    clock.lap(Stage::Forest);

    let pooled_scores: Vec<f64> = pool.iter().map(|&i| score_map.values()[i]).collect();
    let clusters = labels::kmeans_two(&pooled_scores).map_err(at(Stage::PseudoLabel))?;
    let pooled = labels::assign_classes(&clusters).map_err(at(Stage::PseudoLabel))?;
    let mut full_labels = vec![false; w * h];
    for (&p, &oil) in pool.iter().zip(&pooled.full_labels) {
        full_labels[p] = oil;
    }
    let training = labels::sample_training(
        &full_labels,
        Some(&pool),
        config.train_fraction,
        &mut rng::stage(config.seed, rng::SAMPLING),
    )
    .map_err(at(Stage::PseudoLabel))?;
    clock.lap(Stage::PseudoLabel);

    let features = Spectra::new(
        stack.components(),
        training.train_indices.iter().flat_map(|&i| stack.pixel(i).iter().copied()).collect(),
    );
    let cv = svm::cross_validate(
        &features,
        &training.train_labels,
        &config.cv_grid,
        svm::DEFAULT_TOLERANCE,
        &mut rng::stage(config.seed, rng::CV_FOLDS),
    )
    .map_err(at(Stage::Svm))?;
    log::info!("svm grid search: C = {}, gamma = {}, accuracy = {:.4}", cv.c, cv.gamma, cv.accuracy);
    let svm_model = svm::train_svm(
        &features,
        &training.train_labels,
        &SvmParams::new(cv.c, cv.gamma),
        &mut rng::stage(config.seed, rng::PLATT_SPLIT),
    )
    .map_err(at(Stage::Svm))?;
    let mut initial_map = svm::predict_field(&svm_model, &stack).map_err(at(Stage::Svm))?;
    if let Some(a) = &active {
        initial_map = masked(&initial_map, a);
    }
    out.map("initial", &initial_map, Some((0.0, 1.0)))?;
    clock.lap(Stage::Svm);

    let (refined, detection, erw_iterations) = if config.skip_erw {
        let detection = initial_map.map(|o| if o > 0.5 { 1.0 } else { 0.0 });
        (initial_map.clone(), detection, 0)
    } else {
        if config.guidance_component >= stack.components() {
            return Err(PipelineError::new(
                Stage::Erw,
                format!("guidance component {} of {}", config.guidance_component, stack.components()),
            ));
        }
        let guidance = stack.plane(config.guidance_component);
        let graph = erw::build_graph(&guidance, config.beta, active.as_deref()).map_err(at(Stage::Erw))?;
        let refined = erw::refine(&initial_map, &graph, &ErwOptions::with_gamma(config.gamma)).map_err(at(Stage::Erw))?;
        let detection = erw::argmax_map(&refined);
        (refined.oil, detection, refined.iterations)
    };
    let detection = match &active {
        Some(a) => masked(&detection, a),
        None => detection,
    };
    out.map("refined", &refined, Some((0.0, 1.0)))?;
    out.map("detection", &detection, Some((0.0, 1.0)))?;
    clock.lap(Stage::Erw);

    let eval_report = match &reference {
        Some(truth) => Some(eval::evaluate(&refined, &detection, truth, active.as_deref()).map_err(at(Stage::Eval))?),
        None => None,
    };
    clock.lap(Stage::Eval);

    let params = ChosenParams {
        components: model.components(),
        kpca_bandwidth: bandwidth,
        trees: config.trees,
        sample_size: config.sample_size,
        train_fraction: config.train_fraction,
        pseudo_oil_pixels: pooled.oil_count(),
        training_pixels: training.train_indices.len(),
        svm_c: cv.c,
        svm_gamma: cv.gamma,
        cv_accuracy: cv.accuracy,
        beta: config.beta,
        gamma: config.gamma,
        seed: config.seed,
        skip_band_screen: config.skip_band_screen,
        skip_erw: config.skip_erw,
        erw_iterations,
    };
    out.json(
        "metrics.json",
        &Metrics {
            noise: noise_report.as_ref(),
            params: &params,
            auc: eval_report.and_then(|r| r.auc),
            dp: eval_report.map(|r| r.dp),
            counts: eval_report.as_ref().map(|r| &r.counts),
            no_positive: eval_report.map(|r| r.no_positive),
        },
    )?;
    let timings = clock.finish();
    out.json("timings.json", &timings)?;

    Ok(RunArtifacts {
        noise_report,
        score_map,
        initial_map,
        refined,
        detection,
        eval_report,
        params,
        timings,
        active,
        reference,
    })
}

/// Files written by [`synthesize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub header: PathBuf,
    pub raster: PathBuf,
    pub truth: PathBuf,
}

/// Writes the configured synthetic scene as an ENVI cube (`scene.hdr`,
/// `scene.img`) and its planted mask as `truth.f32` and `truth.pgm`.
pub fn synthesize(config: &PipelineConfig, out_dir: &Path) -> Result<SynthOutput, PipelineError> {
    let InputSource::Scene(spec) = &config.input else {
        return Err(PipelineError::new(Stage::Config, "synth needs `input = scene`"));
    };
    let (cube, truth) = scene::generate_scene(spec, config.seed).map_err(at(Stage::Load))?;
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::new(Stage::Output, io::IoError::io(out_dir, e)))?;
    let header = io::write_envi_f32(&cube, &out_dir.join("scene")).map_err(at(Stage::Output))?;
    let truth_path = out_dir.join("truth.f32");
    io::write_float_raster(&truth.mask, &truth_path).map_err(at(Stage::Output))?;
    io::write_gray_pgm(&truth.mask, 0.0, 1.0, &out_dir.join("truth.pgm")).map_err(at(Stage::Output))?;
    Ok(SynthOutput {
        raster: header.with_extension("img"),
        header,
        truth: truth_path,
    })
}

fn masked(field: &ScalarField, active: &[bool]) -> ScalarField {
    let values = field
        .values()
        .iter()
        .zip(active)
        .map(|(&v, &a)| if a { v } else { 0.0 })
        .collect();
    ScalarField::new(field.width(), field.height(), values).expect("same shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationSwitch {
    BandScreen,
    Erw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub switch: AblationSwitch,
    pub with: EvalReport,
    pub without: EvalReport,
    pub auc_delta: f64,
    pub dp_delta: f64,
    /// Isolated positives in the detection map with and without the stage.
    pub isolated_with: usize,
    pub isolated_without: usize,
}

/// Runs the pipeline with the switched stage on and off under the same seed.
///
/// For the ERW switch one run suffices: every stage before ERW draws from
/// its own substream, so the initial map of the ERW run is exactly the
/// output of a run with `skip_erw`.
pub fn run_ablation(config: &PipelineConfig, switch: AblationSwitch) -> Result<AblationReport, PipelineError> {
    let has_reference = config.reference_mask.is_some() || matches!(config.input, InputSource::Scene(_));
    if !has_reference {
        return Err(PipelineError::new(Stage::Eval, "ablation needs a reference mask"));
    }
    let (with, without) = match switch {
        AblationSwitch::BandScreen => {
            let on = PipelineConfig {
                skip_band_screen: false,
                ..config.clone()
            };
            let off = PipelineConfig {
                skip_band_screen: true,
                output_dir: None,
                ..config.clone()
            };
            (run(&on)?, run(&off)?)
        }
        AblationSwitch::Erw => {
            let on = run(&PipelineConfig {
                skip_erw: false,
                ..config.clone()
            })?;
            let off = erw_off_view(&on)?;
            (on, off)
        }
    };
    ablation_report(switch, &with, &without)
}

/// The artifacts a `skip_erw` run would produce, derived from a full run.
pub fn erw_off_view(full: &RunArtifacts) -> Result<RunArtifacts, PipelineError> {
    let detection = full.initial_map.map(|o| if o > 0.5 { 1.0 } else { 0.0 });
    let detection = match &full.active {
        Some(a) => masked(&detection, a),
        None => detection,
    };
    let eval_report = match &full.reference {
        Some(truth) => Some(
            eval::evaluate(&full.initial_map, &detection, truth, full.active.as_deref()).map_err(at(Stage::Eval))?,
        ),
        None => None,
    };
    Ok(RunArtifacts {
        refined: full.initial_map.clone(),
        detection,
        eval_report,
        params: ChosenParams {
            skip_erw: true,
            erw_iterations: 0,
            ..full.params.clone()
        },
        ..full.clone()
    })
}

pub fn ablation_report(
    switch: AblationSwitch,
    with: &RunArtifacts,
    without: &RunArtifacts,
) -> Result<AblationReport, PipelineError> {
    let (Some(a), Some(b)) = (with.eval_report, without.eval_report) else {
        return Err(PipelineError::new(Stage::Eval, "ablation needs a reference mask"));
    };
    Ok(AblationReport {
        switch,
        with: a,
        without: b,
        auc_delta: a.auc.unwrap_or(0.0) - b.auc.unwrap_or(0.0),
        dp_delta: a.dp - b.dp,
        isolated_with: eval::isolated_positives(&with.detection),
        isolated_without: eval::isolated_positives(&without.detection),
    })
}

//! Benchmark orchestration: run configuration, dataset ingestion, the
//! synthetic texture corpus, the noise-sweep evaluation matrix, and report
//! serialization.
//!
//! Everything here is deterministic for a fixed [`RunConfig`]: noise
//! streams are derived per (SNR level, image index), so adding or removing
//! levels never changes the remaining rows.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clbp::{extract_clbp_histogram, extract_lbp_histogram, ClbpParams};
use crate::error::{Error, Result};
use crate::imagecore::{
    inject_gaussian_noise, load_image, quantize_image, synth_texture, GrayImage, NoiseSpec,
    TextureKind,
};
use crate::ml::{
    classify, evaluate, split_indices, ClassifierConfig, LabeledDataset, MetricsReport,
};
use crate::pipeline::{denoise_batch, DenoiseConfig};
use crate::rng::derive_seed;

// ======================= Noise levels =======================

/// One entry of the evaluation sweep: either pristine test images or a
/// Gaussian noise target in decibels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrLevel {
    Clean,
    Db(f64),
}

impl SnrLevel {
    /// Seed tag bits distinguishing this level's noise stream.
    pub(crate) fn tag_bits(&self) -> u64 {
        match self {
            SnrLevel::Clean => f64::INFINITY.to_bits(),
            SnrLevel::Db(db) => db.to_bits(),
        }
    }
}

impl fmt::Display for SnrLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnrLevel::Clean => f.write_str("clean"),
            SnrLevel::Db(db) if db.fract() == 0.0 && db.abs() < 1e15 => write!(f, "{db:.0}"),
            SnrLevel::Db(db) => write!(f, "{db}"),
        }
    }
}

impl std::str::FromStr for SnrLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "clean" || lower == "none" {
            return Ok(SnrLevel::Clean);
        }
        let db: f64 = lower.parse().map_err(|_| {
            Error::InvalidParameter(format!("invalid SNR level {s:?} (expected \"clean\" or a dB value)"))
        })?;
        if db.is_nan() {
            return Err(Error::InvalidParameter("SNR level cannot be NaN".into()));
        }
        Ok(SnrLevel::Db(db))
    }
}

impl Serialize for SnrLevel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SnrLevel::Clean => s.serialize_str("clean"),
            SnrLevel::Db(db) => s.serialize_f64(*db),
        }
    }
}

impl<'de> Deserialize<'de> for SnrLevel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) if v.is_nan() => Err(serde::de::Error::custom("SNR level cannot be NaN")),
            Repr::Num(v) => Ok(SnrLevel::Db(v)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

// ======================= Feature mode =======================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    /// Sign-component histogram only.
    Lbp,
    /// Joint sign/magnitude/center histogram.
    Clbp,
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Lbp => "lbp",
            FeatureMode::Clbp => "clbp",
        })
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbp" => Ok(FeatureMode::Lbp),
            "clbp" => Ok(FeatureMode::Clbp),
            other => Err(Error::InvalidParameter(format!(
                "unknown feature mode {other:?} (expected lbp or clbp)"
            ))),
        }
    }
}

// ======================= Run configuration =======================

/// Parameters of the generated texture corpus used when `dataset_root` is
/// the literal string `"synthetic"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub per_class: usize,
    pub size: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            per_class: 300,
            size: 64,
            seed: 2024,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(Error::Config("synthetic corpus needs per_class >= 1".into()));
        }
        if self.size < 8 {
            return Err(Error::Config(format!(
                "synthetic texture size must be at least 8, got {}",
                self.size
            )));
        }
        Ok(())
    }
}

/// Full description of one benchmark run. Serializes to JSON; every field
/// has a default so partial config files work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Directory with one subdirectory per class, or `"synthetic"`.
    pub dataset_root: String,
    pub feature_mode: FeatureMode,
    pub denoise: DenoiseConfig,
    pub clbp: ClbpParams,
    pub classifier: ClassifierConfig,
    pub split_seed: u64,
    pub noise_seed: u64,
    pub snr_levels: Vec<SnrLevel>,
    pub train_fraction: f64,
    /// Run the denoise pipeline on the (clean) training images too, so
    /// train and test features see identical processing.
    pub denoise_train: bool,
    pub stratify: bool,
    /// Round noisy test images to 8-bit levels before denoising,
    /// simulating re-export through an integer image format.
    pub quantize_noisy: bool,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_root: "synthetic".into(),
            feature_mode: FeatureMode::Clbp,
            denoise: DenoiseConfig::default(),
            clbp: ClbpParams::default(),
            classifier: ClassifierConfig::default(),
            split_seed: 42,
            noise_seed: 1234,
            snr_levels: vec![
                SnrLevel::Clean,
                SnrLevel::Db(50.0),
                SnrLevel::Db(40.0),
                SnrLevel::Db(30.0),
                SnrLevel::Db(20.0),
            ],
            train_fraction: 0.8,
            denoise_train: true,
            stratify: true,
            quantize_noisy: false,
            synth: SynthSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_levels.is_empty() {
            return Err(Error::Config("snr_levels must not be empty".into()));
        }
        for level in &self.snr_levels {
            if let SnrLevel::Db(db) = level {
                if db.is_nan() || *db == f64::NEG_INFINITY {
                    return Err(Error::Config(format!("invalid SNR level {db}")));
                }
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        self.denoise.validate()?;
        self.clbp.validate()?;
        self.classifier.validate()?;
        if self.dataset_root == "synthetic" {
            self.synth.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

// ======================= Dataset ingestion =======================

/// In-memory labelled image collection.
#[derive(Debug, Clone)]
pub struct ImageDataset {
    pub images: Vec<GrayImage>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl ImageDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

fn is_supported_image(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("pgm" | "png")
    )
}

/// `(path, class index)` pairs plus class names in index order.
pub type DatasetIndex = (Vec<(PathBuf, usize)>, Vec<String>);

/// Lists a class-per-subdirectory tree: classes are the immediate
/// subdirectories in lexicographic order, files within each class are
/// sorted by name.
pub fn scan_dataset(root: &Path) -> Result<DatasetIndex> {
    let read_dir = |p: &Path| {
        std::fs::read_dir(p).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let mut class_dirs: Vec<PathBuf> = Vec::new();
    for entry in read_dir(root)? {
        let entry = entry.map_err(|source| Error::Io {
            path: root.to_path_buf(),
            source,
        })?;
        if entry.path().is_dir() {
            class_dirs.push(entry.path());
        }
    }
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::Dataset(format!(
            "{} contains no class subdirectories",
            root.display()
        )));
    }

    let mut entries = Vec::new();
    let mut class_names = Vec::new();
    for (class_idx, dir) in class_dirs.iter().enumerate() {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files: Vec<PathBuf> = Vec::new();
        for entry in read_dir(dir)? {
            let entry = entry.map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?;
            let path = entry.path();
            if path.is_file() && is_supported_image(&path) {
                files.push(path);
            }
        }
        files.sort();
        if files.is_empty() {
            return Err(Error::Dataset(format!(
                "class directory {} contains no supported images (expected *.pgm or *.png)",
                dir.display()
            )));
        }
        class_names.push(name);
        entries.extend(files.into_iter().map(|p| (p, class_idx)));
    }
    Ok((entries, class_names))
}

/// Loads every image named by [`scan_dataset`], failing fast with the
/// offending path.
pub fn load_dataset(root: &Path) -> Result<ImageDataset> {
    let (entries, class_names) = scan_dataset(root)?;
    let mut images = Vec::with_capacity(entries.len());
    let mut labels = Vec::with_capacity(entries.len());
    for (path, class) in entries {
        images.push(load_image(&path)?);
        labels.push(class);
    }
    Ok(ImageDataset {
        images,
        labels,
        class_names,
    })
}

/// Generates the balanced six-class synthetic corpus. Images are seeded
/// per (class, instance), and the texture period cycles through three
/// scales so each class has internal variety.
pub fn synthetic_corpus(spec: &SynthSpec) -> Result<ImageDataset> {
    spec.validate()?;
    let mut images = Vec::with_capacity(TextureKind::ALL.len() * spec.per_class);
    let mut labels = Vec::with_capacity(images.capacity());
    for (kind_idx, kind) in TextureKind::ALL.iter().enumerate() {
        for i in 0..spec.per_class {
            let seed = derive_seed(spec.seed, kind_idx as u64, i as u64);
            let period = 6 + 2 * (i % 3);
            images.push(synth_texture(*kind, spec.size, period, seed)?);
            labels.push(kind_idx);
        }
    }
    let class_names = TextureKind::ALL.iter().map(|k| k.name().to_string()).collect();
    Ok(ImageDataset {
        images,
        labels,
        class_names,
    })
}

/// Loads the dataset a config points at (directory tree or synthetic).
pub fn resolve_dataset(cfg: &RunConfig) -> Result<ImageDataset> {
    if cfg.dataset_root == "synthetic" {
        synthetic_corpus(&cfg.synth)
    } else {
        load_dataset(Path::new(&cfg.dataset_root))
    }
}

// ======================= Feature extraction =======================

/// Extracts one histogram per image, in parallel, preserving order. On
/// failure, reports the lowest-indexed failing image.
pub fn extract_features(
    images: &[GrayImage],
    mode: FeatureMode,
    params: &ClbpParams,
) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let results: Vec<Result<Vec<f64>>> = images
        .par_iter()
        .map(|img| match mode {
            FeatureMode::Clbp => extract_clbp_histogram(img, params).map(|f| f.histogram),
            FeatureMode::Lbp => extract_lbp_histogram(img, params),
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for (index, result) in results.into_iter().enumerate() {
        match result {
            Ok(hist) => out.push(hist),
            Err(e) => {
                return Err(Error::Batch {
                    index,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(out)
}

/// CSV dump of feature vectors: `label,bin_0,...,bin_{D-1}`, one row per
/// image, floats in shortest round-trip form.
pub fn features_to_csv(
    features: &[Vec<f64>],
    labels: &[usize],
    class_names: &[String],
) -> Result<String> {
    if features.len() != labels.len() {
        return Err(Error::Dataset(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features.first().map_or(0, Vec::len);
    let mut out = String::from("label");
    for i in 0..dim {
        out.push_str(&format!(",bin_{i}"));
    }
    out.push('\n');
    for (feat, &label) in features.iter().zip(labels) {
        let name = class_names
            .get(label)
            .ok_or_else(|| Error::Dataset(format!("label {label} out of range")))?;
        out.push_str(name);
        for v in feat {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    Ok(out)
}

// ======================= Benchmark =======================

/// One cell of the evaluation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub feature: FeatureMode,
    pub denoise: crate::pipeline::DenoiseMode,
    pub classifier: String,
    pub snr: SnrLevel,
    pub metrics: MetricsReport,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub version: String,
    pub config: RunConfig,
    pub class_names: Vec<String>,
    pub rows: Vec<BenchmarkRow>,
}

fn cell_err(level: SnrLevel) -> impl Fn(Error) -> Error {
    move |e| Error::Cell {
        snr: level.to_string(),
        source: Box::new(e),
    }
}

/// Runs the full protocol: one stratified split, training features from
/// clean (optionally denoised) train images, then for every SNR level the
/// test images are noised, denoised per the configured mode, featurized,
/// and classified. Row order follows `snr_levels`.
pub fn run_benchmark(config: &RunConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let dataset = resolve_dataset(config)?;
    let num_classes = dataset.class_names.len();
    let (train_idx, test_idx) = split_indices(
        &dataset.labels,
        num_classes,
        config.train_fraction,
        config.split_seed,
        config.stratify,
    )?;
    if test_idx.is_empty() {
        return Err(Error::Config(
            "train_fraction leaves no test samples".into(),
        ));
    }

    let train_images: Vec<GrayImage> = train_idx.iter().map(|&i| dataset.images[i].clone()).collect();
    let train_labels: Vec<usize> = train_idx.iter().map(|&i| dataset.labels[i]).collect();
    let test_images: Vec<GrayImage> = test_idx.iter().map(|&i| dataset.images[i].clone()).collect();
    let test_labels: Vec<usize> = test_idx.iter().map(|&i| dataset.labels[i]).collect();

    let train_processed = if config.denoise_train {
        denoise_batch(&train_images, &config.denoise)?
    } else {
        train_images
    };
    let train_features = extract_features(&train_processed, config.feature_mode, &config.clbp)?;
    let train_set = LabeledDataset::new(train_features, train_labels, dataset.class_names.clone())?;

    let mut rows = Vec::with_capacity(config.snr_levels.len());
    for &level in &config.snr_levels {
        let start = Instant::now();
        let noisy: Vec<GrayImage> = match level {
            SnrLevel::Clean => test_images.clone(),
            SnrLevel::Db(db) => {
                let level_master = derive_seed(config.noise_seed, level.tag_bits(), 0);
                test_images
                    .iter()
                    .zip(&test_idx)
                    .map(|(img, &global_idx)| {
                        inject_gaussian_noise(
                            img,
                            &NoiseSpec {
                                snr_db: db,
                                seed: level_master ^ global_idx as u64,
                            },
                        )
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(cell_err(level))?
            }
        };
        let noisy: Vec<GrayImage> = if config.quantize_noisy {
            noisy.iter().map(quantize_image).collect()
        } else {
            noisy
        };
        let denoised = denoise_batch(&noisy, &config.denoise).map_err(cell_err(level))?;
        let feats =
            extract_features(&denoised, config.feature_mode, &config.clbp).map_err(cell_err(level))?;
        let predictions = classify(&train_set, &feats, &config.classifier).map_err(cell_err(level))?;
        let metrics = evaluate(&test_labels, &predictions, num_classes).map_err(cell_err(level))?;
        rows.push(BenchmarkRow {
            feature: config.feature_mode,
            denoise: config.denoise.mode,
            classifier: config.classifier.name().to_string(),
            snr: level,
            metrics,
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    Ok(BenchmarkReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        class_names: dataset.class_names,
        rows,
    })
}

// ======================= Report output =======================

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format {other:?} (expected json or csv)"
            ))),
        }
    }
}

/// CSV rendering with four decimal places for real-valued columns.
pub fn report_to_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from("feature,denoise,classifier,snr,precision,recall,f1,seconds\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{:.4},{:.4},{:.4},{:.4}\n",
            row.feature,
            row.denoise,
            row.classifier,
            row.snr,
            row.metrics.weighted_precision,
            row.metrics.weighted_recall,
            row.metrics.weighted_f1,
            row.seconds,
        ));
    }
    out
}

pub fn report_to_json(report: &BenchmarkReport) -> String {
    let mut text =
        serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    text.push('\n');
    text
}

pub fn write_report(report: &BenchmarkReport, path: &Path, format: ReportFormat) -> Result<()> {
    let content = match format {
        ReportFormat::Json => report_to_json(report),
        ReportFormat::Csv => report_to_csv(report),
    };
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Confusion matrix as CSV: header row of predicted-class names, one row
/// per true class.
pub fn confusion_to_csv(metrics: &MetricsReport, class_names: &[String]) -> Result<String> {
    if class_names.len() != metrics.num_classes {
        return Err(Error::Classifier(format!(
            "{} class names for a {}-class confusion matrix",
            class_names.len(),
            metrics.num_classes
        )));
    }
    let mut out = String::from("true\\predicted");
    for name in class_names {
        out.push_str(&format!(",{name}"));
    }
    out.push('\n');
    for (t, row) in metrics.confusion.iter().enumerate() {
        out.push_str(&class_names[t]);
        for &count in row {
            out.push_str(&format!(",{count}"));
        }
        out.push('\n');
    }
    Ok(out)
}

// ======================= Tests =======================

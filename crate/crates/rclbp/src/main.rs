//! Command-line front end: each pipeline stage is runnable on its own, and
//! `benchmark` runs the full noise-sweep evaluation matrix.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use rclbp::cli::{
    confusion_to_csv, extract_features, features_to_csv, resolve_dataset, run_benchmark,
    write_report, FeatureMode, ReportFormat, RunConfig, SnrLevel,
};
use rclbp::imagecore::{
    inject_gaussian_noise, load_image, save_image, synth_texture, NoiseSpec, TextureKind,
};
use rclbp::ml::{kfold_cv, ClassifierConfig, GnbConfig, KnnConfig, LabeledDataset, Weighting};
use rclbp::pipeline::{denoise_batch, denoise_with_report, DenoiseConfig, DenoiseMode};
use rclbp::{Error, Result};

#[derive(Parser)]
#[command(
    name = "rclbp",
    version,
    about = "Texture-defect detection pipeline: seeded noise injection, two-stage denoising, \
             local binary pattern features, and classification benchmarks"
)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic texture images (one kind, or the full corpus)
    Synth(SynthArgs),
    /// Add seeded Gaussian noise at a target SNR
    InjectNoise(InjectArgs),
    /// Denoise a single image
    Denoise(DenoiseArgs),
    /// Extract feature histograms from a dataset into CSV
    Extract(ExtractArgs),
    /// Single train/test evaluation at one noise level
    Eval(EvalArgs),
    /// Stratified k-fold cross-validation on clean images
    Crossval(CrossvalArgs),
    /// Full noise-sweep benchmark matrix
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Texture kind (blobs, checker, grating, sinusoid, speckle, stripes);
    /// omit to write the full corpus as a class-per-directory tree
    #[arg(long)]
    kind: Option<TextureKind>,
    /// Image side length in pixels
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// Texture period in pixels (single-kind mode)
    #[arg(long, default_value_t = 8)]
    period: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Images per class (corpus mode)
    #[arg(long, default_value_t = 300)]
    per_class: usize,
    /// Output image file (single kind) or directory (corpus)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InjectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Target SNR in dB, or "clean"/"none" to copy the input untouched
    #[arg(long)]
    snr_db: SnrLevel,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// none, nlmeans_only, or rclbp
    #[arg(long, default_value = "rclbp")]
    mode: DenoiseMode,
    /// Half-width of the similarity search window
    #[arg(long)]
    search_radius: Option<usize>,
    /// Half-width of the comparison patch
    #[arg(long)]
    patch_radius: Option<usize>,
    /// Smoothing strength h
    #[arg(long)]
    smoothing_h: Option<f64>,
    /// Std-dev of the Gaussian patch kernel
    #[arg(long)]
    kernel_sigma: Option<f64>,
    /// Wavelet decomposition levels
    #[arg(long)]
    levels: Option<usize>,
    /// Write wavelet shrinkage diagnostics as JSON
    #[arg(long)]
    debug_shrink: Option<PathBuf>,
}

/// Config file plus per-field overrides, shared by the dataset-level
/// subcommands.
#[derive(Args)]
struct ConfigArgs {
    /// JSON run-configuration file; missing fields take defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the fully resolved configuration as JSON and exit
    #[arg(long)]
    print_config: bool,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct ConfigOverrides {
    /// Dataset directory, or "synthetic"
    #[arg(long)]
    dataset_root: Option<String>,
    /// lbp or clbp
    #[arg(long)]
    feature_mode: Option<FeatureMode>,
    /// none, nlmeans_only, or rclbp
    #[arg(long)]
    denoise_mode: Option<DenoiseMode>,
    #[arg(long)]
    search_radius: Option<usize>,
    #[arg(long)]
    patch_radius: Option<usize>,
    #[arg(long)]
    smoothing_h: Option<f64>,
    #[arg(long)]
    kernel_sigma: Option<f64>,
    /// Wavelet decomposition levels
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    clbp_neighbors: Option<usize>,
    #[arg(long)]
    clbp_radius: Option<f64>,
    /// knn or gnb
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    knn_k: Option<usize>,
    /// Minkowski order for KNN distances
    #[arg(long)]
    knn_p: Option<f64>,
    /// uniform or distance
    #[arg(long)]
    knn_weighting: Option<Weighting>,
    #[arg(long)]
    gnb_var_smoothing: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Comma-separated list, e.g. "clean,50,40,30,20"
    #[arg(long, value_delimiter = ',')]
    snr_levels: Option<Vec<SnrLevel>>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// true/false: denoise the clean training images too
    #[arg(long)]
    denoise_train: Option<bool>,
    /// Split without per-class stratification
    #[arg(long)]
    no_stratify: bool,
    /// Round noisy test images to 8-bit levels before denoising
    #[arg(long)]
    quantize_noisy: bool,
    #[arg(long)]
    synth_per_class: Option<usize>,
    #[arg(long)]
    synth_size: Option<usize>,
    #[arg(long)]
    synth_seed: Option<u64>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Noise level for this evaluation (defaults to the first configured level)
    #[arg(long)]
    snr: Option<SnrLevel>,
    /// Write the metrics report JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the confusion matrix as CSV
    #[arg(long)]
    confusion_out: Option<PathBuf>,
}

#[derive(Args)]
struct CrossvalArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, default_value_t = 10)]
    k_folds: usize,
    /// Write the cross-validation report JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

impl ConfigOverrides {
    fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(v) = &self.dataset_root {
            cfg.dataset_root = v.clone();
        }
        if let Some(v) = self.feature_mode {
            cfg.feature_mode = v;
        }
        if let Some(v) = self.denoise_mode {
            cfg.denoise.mode = v;
        }
        if let Some(v) = self.search_radius {
            cfg.denoise.nl.search_radius = v;
        }
        if let Some(v) = self.patch_radius {
            cfg.denoise.nl.patch_radius = v;
        }
        if let Some(v) = self.smoothing_h {
            cfg.denoise.nl.h = v;
        }
        if let Some(v) = self.kernel_sigma {
            cfg.denoise.nl.kernel_sigma = v;
        }
        if let Some(v) = self.levels {
            cfg.denoise.wav.levels = v;
        }
        if let Some(v) = self.clbp_neighbors {
            cfg.clbp.neighbors = v;
        }
        if let Some(v) = self.clbp_radius {
            cfg.clbp.radius = v;
        }
        if let Some(name) = &self.classifier {
            cfg.classifier = match name.as_str() {
                "knn" => match cfg.classifier {
                    ClassifierConfig::Knn(c) => ClassifierConfig::Knn(c),
                    _ => ClassifierConfig::Knn(KnnConfig::default()),
                },
                "gnb" => match cfg.classifier {
                    ClassifierConfig::Gnb(c) => ClassifierConfig::Gnb(c),
                    _ => ClassifierConfig::Gnb(GnbConfig::default()),
                },
                other => {
                    return Err(Error::Config(format!(
                        "unknown classifier {other:?} (expected knn or gnb)"
                    )))
                }
            };
        }
        if let Some(k) = self.knn_k {
            match &mut cfg.classifier {
                ClassifierConfig::Knn(c) => c.k = k,
                _ => return Err(Error::Config("--knn-k requires --classifier knn".into())),
            }
        }
        if let Some(p) = self.knn_p {
            match &mut cfg.classifier {
                ClassifierConfig::Knn(c) => c.p = p,
                _ => return Err(Error::Config("--knn-p requires --classifier knn".into())),
            }
        }
        if let Some(w) = self.knn_weighting {
            match &mut cfg.classifier {
                ClassifierConfig::Knn(c) => c.weighting = w,
                _ => {
                    return Err(Error::Config(
                        "--knn-weighting requires --classifier knn".into(),
                    ))
                }
            }
        }
        if let Some(s) = self.gnb_var_smoothing {
            match &mut cfg.classifier {
                ClassifierConfig::Gnb(c) => c.var_smoothing = s,
                _ => {
                    return Err(Error::Config(
                        "--gnb-var-smoothing requires --classifier gnb".into(),
                    ))
                }
            }
        }
        if let Some(v) = self.split_seed {
            cfg.split_seed = v;
        }
        if let Some(v) = self.noise_seed {
            cfg.noise_seed = v;
        }
        if let Some(v) = &self.snr_levels {
            cfg.snr_levels = v.clone();
        }
        if let Some(v) = self.train_fraction {
            cfg.train_fraction = v;
        }
        if let Some(v) = self.denoise_train {
            cfg.denoise_train = v;
        }
        if self.no_stratify {
            cfg.stratify = false;
        }
        if self.quantize_noisy {
            cfg.quantize_noisy = true;
        }
        if let Some(v) = self.synth_per_class {
            cfg.synth.per_class = v;
        }
        if let Some(v) = self.synth_size {
            cfg.synth.size = v;
        }
        if let Some(v) = self.synth_seed {
            cfg.synth.seed = v;
        }
        Ok(cfg)
    }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let base: RunConfig = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        let cfg = self.overrides.apply(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolves the config; handles `--print-config` by echoing it and
    /// returning `None` so the caller exits successfully without running.
    fn resolve_or_print(&self) -> Result<Option<RunConfig>> {
        let cfg = self.resolve()?;
        if self.print_config {
            println!("{}", cfg.to_json_pretty());
            return Ok(None);
        }
        Ok(Some(cfg))
    }
}

fn write_text(path: &PathBuf, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })
}

fn emit_json(out: &Option<PathBuf>, json: String) -> Result<()> {
    match out {
        Some(path) => write_text(path, &json),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn run_synth(args: SynthArgs) -> Result<()> {
    match args.kind {
        Some(kind) => {
            let img = synth_texture(kind, args.size, args.period, args.seed)?;
            save_image(&img, &args.out)
        }
        None => {
            let spec = rclbp::cli::SynthSpec {
                per_class: args.per_class,
                size: args.size,
                seed: args.seed,
            };
            let corpus = rclbp::cli::synthetic_corpus(&spec)?;
            let mut written = vec![0usize; corpus.class_names.len()];
            for (img, &label) in corpus.images.iter().zip(&corpus.labels) {
                let dir = args.out.join(&corpus.class_names[label]);
                std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
                    path: dir.clone(),
                    source,
                })?;
                let path = dir.join(format!("{:04}.pgm", written[label]));
                save_image(img, &path)?;
                written[label] += 1;
            }
            Ok(())
        }
    }
}

fn run_inject(args: InjectArgs) -> Result<()> {
    let img = load_image(&args.input)?;
    let noisy = match args.snr_db {
        SnrLevel::Clean => img,
        SnrLevel::Db(db) => inject_gaussian_noise(
            &img,
            &NoiseSpec {
                snr_db: db,
                seed: args.seed,
            },
        )?,
    };
    save_image(&noisy, &args.output)
}

fn run_denoise(args: DenoiseArgs) -> Result<()> {
    let mut cfg = DenoiseConfig {
        mode: args.mode,
        ..DenoiseConfig::default()
    };
    if let Some(v) = args.search_radius {
        cfg.nl.search_radius = v;
    }
    if let Some(v) = args.patch_radius {
        cfg.nl.patch_radius = v;
    }
    if let Some(v) = args.smoothing_h {
        cfg.nl.h = v;
    }
    if let Some(v) = args.kernel_sigma {
        cfg.nl.kernel_sigma = v;
    }
    if let Some(v) = args.levels {
        cfg.wav.levels = v;
    }
    let img = load_image(&args.input)?;
    let (restored, shrink) = denoise_with_report(&img, &cfg)?;
    save_image(&restored, &args.output)?;
    if let Some(path) = args.debug_shrink {
        let json = serde_json::to_string_pretty(&shrink)
            .map_err(|e| Error::Config(e.to_string()))?;
        write_text(&path, &(json + "\n"))?;
    }
    Ok(())
}

fn run_extract(args: ExtractArgs) -> Result<()> {
    let Some(cfg) = args.cfg.resolve_or_print()? else {
        return Ok(());
    };
    let dataset = resolve_dataset(&cfg)?;
    let processed = denoise_batch(&dataset.images, &cfg.denoise)?;
    let features = extract_features(&processed, cfg.feature_mode, &cfg.clbp)?;
    let csv = features_to_csv(&features, &dataset.labels, &dataset.class_names)?;
    write_text(&args.out, &csv)
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let Some(mut cfg) = args.cfg.resolve_or_print()? else {
        return Ok(());
    };
    let level = args.snr.unwrap_or(cfg.snr_levels[0]);
    cfg.snr_levels = vec![level];
    let report = run_benchmark(&cfg)?;
    let row = &report.rows[0];
    let json = serde_json::to_string_pretty(&row.metrics)
        .map_err(|e| Error::Config(e.to_string()))?;
    emit_json(&args.out, json)?;
    if let Some(path) = &args.confusion_out {
        let csv = confusion_to_csv(&row.metrics, &report.class_names)?;
        write_text(path, &csv)?;
    }
    Ok(())
}

fn run_crossval(args: CrossvalArgs) -> Result<()> {
    let Some(cfg) = args.cfg.resolve_or_print()? else {
        return Ok(());
    };
    let dataset = resolve_dataset(&cfg)?;
    let images = if cfg.denoise_train {
        denoise_batch(&dataset.images, &cfg.denoise)?
    } else {
        dataset.images
    };
    let features = extract_features(&images, cfg.feature_mode, &cfg.clbp)?;
    let ds = LabeledDataset::new(features, dataset.labels, dataset.class_names)?;
    let report = kfold_cv(&ds, args.k_folds, &cfg.classifier, cfg.split_seed)?;
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    emit_json(&args.out, json)
}

fn run_benchmark_cmd(args: BenchmarkArgs) -> Result<()> {
    let Some(cfg) = args.cfg.resolve_or_print()? else {
        return Ok(());
    };
    let report = run_benchmark(&cfg)?;
    match &args.out {
        Some(path) => write_report(&report, path, args.format),
        None => {
            let text = match args.format {
                ReportFormat::Json => rclbp::cli::report_to_json(&report),
                ReportFormat::Csv => rclbp::cli::report_to_csv(&report),
            };
            print!("{text}");
            Ok(())
        }
    }
}

fn run(args: CliArgs) -> Result<()> {
    match args.command {
        Command::Synth(a) => run_synth(a),
        Command::InjectNoise(a) => run_inject(a),
        Command::Denoise(a) => run_denoise(a),
        Command::Extract(a) => run_extract(a),
        Command::Eval(a) => run_eval(a),
        Command::Crossval(a) => run_crossval(a),
        Command::Benchmark(a) => run_benchmark_cmd(a),
    }
}

fn main() {
    let args = CliArgs::parse();
    if let Err(e) = run(args) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

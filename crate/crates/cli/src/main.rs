//! `binrobust` command-line interface.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use binrobust::imagecore::{Interpolation, Spacing};
use binrobust::io::{write_png16, write_raw};
use binrobust::morphology::StructuringElement;
use binrobust::ngldm::NgldmParams;
use binrobust::phantom::{generate_corpus, PhantomConfig, Texture};
use binrobust::pipeline::{
    build_report, compare_features, emit_scatter, extract_features, ingest_manifest, load_subjects, write_manifest,
    Comparison, ExperimentConfig, FeatureTable, ManifestEntry, PipelineError, RobustnessReport, SpacingTarget,
    ToolInfo,
};
use binrobust::quantize::BinningSpec;
use binrobust::similarity::DEFAULT_THRESHOLD;

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "binrobust", version, about = "NGLDM feature robustness under dynamic vs. static gray-level binning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus plus manifest.csv.
    Phantom(PhantomArgs),
    /// Extract NGLDM features for every manifest image into features.csv.
    Extract(ExtractArgs),
    /// Compute agreement metrics from an existing features.csv into report.json.
    Compare(CompareArgs),
    /// Extract and compare in one go: features.csv and report.json.
    Run(ExtractArgs),
    /// Emit original-vs-perturbed scatter data (and optionally SVG) for one feature.
    Scatter(ScatterArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TextureKind {
    SmoothNoise,
    BrightRim,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ImageFormat {
    Raw,
    Png16,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InterpolationArg {
    Bspline,
    Linear,
}

#[derive(Debug, Args)]
struct PhantomArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    n_images: usize,
    #[arg(long, default_value_t = 256)]
    image_size: usize,
    #[arg(long, default_value_t = 128)]
    bbox_size: usize,
    #[arg(long, value_enum, default_value_t = TextureKind::BrightRim)]
    texture: TextureKind,
    #[arg(long, default_value_t = 2.0)]
    correlation_length: f64,
    #[arg(long, default_value_t = 3)]
    rim_width: usize,
    #[arg(long, default_value_t = 2.0)]
    rim_gain: f64,
    /// Tissue classes of the bright-rim texture (0 = continuous).
    #[arg(long, default_value_t = 5)]
    classes: usize,
    /// Pixel spacing `X,Y` in millimeters.
    #[arg(long, default_value = "0.07,0.07")]
    spacing: String,
    #[arg(long, value_enum, default_value_t = ImageFormat::Raw)]
    format: ImageFormat,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Binning spec: `dynamic:N`, `static:LO,HI,N` or `static-width:W[,ORIGIN]` (repeatable).
    #[arg(long = "binning", value_parser = parse_binning)]
    binnings: Vec<BinningSpec>,
    #[arg(long, default_value_t = 0.2)]
    target_area_change: f64,
    /// `auto` (corpus median) or `X,Y` in millimeters.
    #[arg(long, default_value = "auto")]
    spacing: String,
    /// NGLDM gray-level tolerance.
    #[arg(long, default_value_t = 0)]
    bins_alpha: u32,
    /// NGLDM Chebyshev neighborhood radius.
    #[arg(long, default_value_t = 1)]
    distance: u32,
    /// Comma-separated subset of orig_vs_eroded,orig_vs_dilated,eroded_vs_dilated.
    #[arg(long, default_value = "orig_vs_eroded,orig_vs_dilated,eroded_vs_dilated")]
    comparisons: String,
    /// Normalization range `LO,HI`.
    #[arg(long, default_value = "0,255")]
    normalize: String,
    #[arg(long, value_enum, default_value_t = InterpolationArg::Bspline)]
    interpolation: InterpolationArg,
    /// Side of the square structuring element.
    #[arg(long, default_value_t = 3)]
    se_size: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value = "orig_vs_eroded,orig_vs_dilated,eroded_vs_dilated")]
    comparisons: String,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ScatterArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    feature: String,
    #[arg(long, value_parser = parse_binning)]
    binning: BinningSpec,
    #[arg(long, default_value = "orig_vs_eroded")]
    comparison: String,
    /// Also write an SVG plot with the identity line.
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_binning(s: &str) -> Result<BinningSpec, String> {
    s.parse().map_err(|e: binrobust::quantize::QuantizeError| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Data(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_config_error() || matches!(e, PipelineError::UnknownFeature(_) | PipelineError::UnknownBinning(_)) {
            Failure::Config(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Config(format!("{what} must be `A,B`, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_comparisons(s: &str) -> Result<Vec<Comparison>, Failure> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let c: Comparison = part.parse()?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

impl ExperimentArgs {
    fn to_config(&self) -> Result<ExperimentConfig, Failure> {
        let defaults = ExperimentConfig::default();
        let cfg = ExperimentConfig {
            binning_specs: if self.binnings.is_empty() {
                defaults.binning_specs
            } else {
                self.binnings.clone()
            },
            target_area_change: self.target_area_change,
            target_spacing: self.spacing.parse::<SpacingTarget>()?,
            ngldm: NgldmParams {
                alpha: self.bins_alpha,
                distance: self.distance,
            },
            normalization: parse_pair(&self.normalize, "--normalize")?,
            comparisons: parse_comparisons(&self.comparisons)?,
            interpolation: match self.interpolation {
                InterpolationArg::Bspline => Interpolation::CubicBSpline,
                InterpolationArg::Linear => Interpolation::Linear,
            },
            structuring_element: StructuringElement::square(self.se_size).map_err(|e| Failure::Config(e.to_string()))?,
            threshold: self.threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| data_err(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn phantom(args: &PhantomArgs) -> Result<(), Failure> {
    let (sx, sy) = parse_pair(&args.spacing, "--spacing")?;
    let spacing = Spacing::new(sx, sy).map_err(|e| Failure::Config(e.to_string()))?;
    let texture = match args.texture {
        TextureKind::SmoothNoise => Texture::SmoothNoise {
            correlation_length: args.correlation_length,
        },
        TextureKind::BrightRim => Texture::BrightRim {
            correlation_length: args.correlation_length,
            rim_width: args.rim_width,
            rim_gain: args.rim_gain,
            classes: args.classes,
        },
    };
    let cfg = PhantomConfig {
        seed: args.seed,
        n_images: args.n_images,
        image_size: args.image_size,
        bbox_size: args.bbox_size,
        texture,
        base_spacing: spacing,
    };
    let corpus = generate_corpus(&cfg).map_err(|e| Failure::Config(e.to_string()))?;
    let images_dir = args.out_dir.join("images");
    fs::create_dir_all(&images_dir).map_err(data_err)?;
    let mut entries = Vec::with_capacity(corpus.len());
    for p in &corpus {
        let name = match args.format {
            ImageFormat::Raw => format!("{}.raw", p.image_id),
            ImageFormat::Png16 => format!("{}.png", p.image_id),
        };
        let path = images_dir.join(&name);
        match args.format {
            ImageFormat::Raw => write_raw(&p.image, &path),
            ImageFormat::Png16 => write_png16(&p.image, &path),
        }
        .map_err(data_err)?;
        entries.push(ManifestEntry {
            image_id: p.image_id.clone(),
            image_path: PathBuf::from("images").join(name),
            spacing,
            bbox: p.bbox,
            label: None,
        });
    }
    write_file(&args.out_dir, "manifest.csv", &write_manifest(&entries)?)?;
    let meta = serde_json::to_string_pretty(&json!({ "tool": ToolInfo::default(), "phantom": cfg })).map_err(data_err)?;
    write_file(&args.out_dir, "phantom.json", &(meta + "\n"))?;
    Ok(())
}

fn extract(args: &ExtractArgs, with_report: bool) -> Result<(), Failure> {
    let cfg = args.experiment.to_config()?;
    let entries = ingest_manifest(&args.manifest)?;
    if entries.is_empty() {
        return Err(PipelineError::EmptyCorpus.into());
    }
    let subjects = load_subjects(&entries)?;
    let extraction = extract_features(&subjects, &cfg)?;
    log::info!(
        "{} images included, {} excluded",
        extraction.included.len(),
        extraction.excluded.len()
    );
    write_file(&args.out_dir, "features.csv", &extraction.table.to_csv()?)?;
    if with_report {
        write_file(&args.out_dir, "report.json", &build_report(&cfg, &extraction).to_json())?;
    }
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<(), Failure> {
    let comparisons = parse_comparisons(&args.comparisons)?;
    if comparisons.is_empty() {
        return Err(Failure::Config("at least one comparison is required".into()));
    }
    let text = fs::read_to_string(&args.features).map_err(|e| data_err(format!("{}: {e}", args.features.display())))?;
    let table = FeatureTable::from_csv(&text)?;
    let binnings = table.binnings();
    let report = RobustnessReport {
        tool: ToolInfo::default(),
        provenance: json!({
            "source": "features table",
            "binning_labels": binnings,
            "comparisons": comparisons,
            "threshold": args.threshold,
            "n_images": table.image_ids().len(),
        }),
        results: compare_features(&table, &binnings, &comparisons, args.threshold),
    };
    write_file(&args.out_dir, "report.json", &report.to_json())?;
    Ok(())
}

fn scatter(args: &ScatterArgs) -> Result<(), Failure> {
    let comparison: Comparison = args.comparison.parse()?;
    let text = fs::read_to_string(&args.features).map_err(|e| data_err(format!("{}: {e}", args.features.display())))?;
    let table = FeatureTable::from_csv(&text)?;
    let scatter = emit_scatter(&table, &args.feature, &args.binning.to_string(), comparison)?;
    let stem = scatter.file_stem();
    write_file(&args.out_dir, &format!("{stem}.csv"), &scatter.to_csv()?)?;
    if args.svg {
        write_file(&args.out_dir, &format!("{stem}.svg"), &scatter.to_svg())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Phantom(a) => phantom(a),
        Command::Extract(a) => extract(a, false),
        Command::Run(a) => extract(a, true),
        Command::Compare(a) => compare(a),
        Command::Scatter(a) => scatter(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

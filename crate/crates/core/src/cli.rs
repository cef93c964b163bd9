//! Command-line front end. `main` only parses arguments and maps the
//! returned error to an exit status.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::compose::{self, AssetRef, ComposeError, PreparedLayout};
use crate::embedstats::{self, EmbedError, FeatureSet, TsneConfig};
use crate::imaging::{ImagingError, RasterImage};
use crate::layout::{self, LayoutError, LayoutSpec};
use crate::padmetrics::{self, ApcerMode, PadError};
use crate::persona::{self, Profile};
use crate::qualitygate::{self, FaceSource, QualityError, ThresholdProfile};

/// Environment variable naming a threshold-profile JSON file.
pub const PROFILE_ENV: &str = "IDFORGE_PROFILE";

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_EXHAUSTED: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "idforge", version, about = "Synthetic ID-card generation and PAD evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter a face pool by quality and compose a batch of documents
    Generate(GenerateArgs),
    /// Compute APCER/BPCER/EER from a score file and write a report plus DET CSV
    PadMetrics(PadMetricsArgs),
    /// Print the Fréchet distance between two feature files
    Fid(FidArgs),
    /// Embed a feature file in 2-D with exact t-SNE
    Tsne(TsneArgs),
    /// Write the DET curve of a score file as CSV and optionally SVG
    DetExport(DetExportArgs),
    /// Check a layout file against the schema and invariants
    ValidateLayout(ValidateLayoutArgs),
    /// Print seeded text-to-image prompts
    Prompts(PromptsArgs),
    /// Extract patch-histogram features from a directory of images
    Embed(EmbedArgs),
    /// Write procedural face and signature pools with a matching quality CSV
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Layout JSON file, or builtin:citizen / builtin:extranjero
    #[arg(long, default_value = "builtin:citizen")]
    pub layout: String,
    /// Master seed; item i uses a seed mixed from this and i
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of documents to generate
    #[arg(long)]
    pub count: usize,
    /// Directory of candidate face images
    #[arg(long)]
    pub faces_dir: PathBuf,
    /// Directory of signature scans
    #[arg(long)]
    pub signatures_dir: PathBuf,
    /// Face quality CSV (OFIQ-style); without it faces are used unfiltered
    #[arg(long)]
    pub ofiq_csv: Option<PathBuf>,
    /// Threshold profile JSON; overrides the IDFORGE_PROFILE variable
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (output does not depend on this)
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Train/val/test fractions, e.g. 0.7,0.15,0.15; entries stay unsplit without it
    #[arg(long, value_parser = parse_fractions)]
    pub split: Option<(f64, f64, f64)>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Score CSV with header id,true_class,score
    #[arg(long)]
    pub scores: PathBuf,
    /// Negate scores, for systems where higher means bona fide
    #[arg(long)]
    pub invert_polarity: bool,
    /// Pool all attack species instead of taking the worst one
    #[arg(long)]
    pub pooled: bool,
}

#[derive(Debug, Args)]
pub struct PadMetricsArgs {
    #[command(flatten)]
    pub scores: ScoreArgs,
    /// Decision threshold for the per-species rates; defaults to the EER threshold
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Output directory for pad_report.json and det.csv
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FidArgs {
    /// First feature file (FSET binary or CSV)
    #[arg(long)]
    pub features_a: PathBuf,
    /// Second feature file (FSET binary or CSV)
    #[arg(long)]
    pub features_b: PathBuf,
}

#[derive(Debug, Args)]
pub struct TsneArgs {
    /// Feature file (FSET binary or CSV)
    #[arg(long)]
    pub features: PathBuf,
    /// Target perplexity; must be below (n - 1) / 3
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    /// Gradient-descent iterations
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Seed for the initial embedding
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Learning rate; defaults to n / 48, at least 1
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Output CSV (x,y); standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetExportArgs {
    #[command(flatten)]
    pub scores: ScoreArgs,
    /// Output CSV; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot here
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateLayoutArgs {
    /// Layout JSON file, or builtin:<template_id>
    #[arg(long)]
    pub layout: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PromptMode {
    Face,
    Card,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DocumentKind {
    Citizen,
    Extranjero,
}

impl From<DocumentKind> for Profile {
    fn from(k: DocumentKind) -> Self {
        match k {
            DocumentKind::Citizen => Profile::Citizen,
            DocumentKind::Extranjero => Profile::Extranjero,
        }
    }
}

#[derive(Debug, Args)]
pub struct PromptsArgs {
    /// Seed for the sampled attributes or persona
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// face: positive and negative portrait prompts; card: document prompt
    #[arg(long, value_enum, default_value = "face")]
    pub mode: PromptMode,
    /// Document type for card prompts
    #[arg(long, value_enum, default_value = "citizen")]
    pub document: DocumentKind,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Directory of PNG/JPEG images
    #[arg(long)]
    pub images: PathBuf,
    /// Output feature file (FSET binary)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// Output directory; receives faces/, signatures/ and ofiq.csv
    #[arg(long)]
    pub out: PathBuf,
    /// Number of face images
    #[arg(long, default_value_t = 16)]
    pub faces: usize,
    /// Number of signature images
    #[arg(long, default_value_t = 4)]
    pub signatures: usize,
    /// Seed for the procedural assets
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_fractions(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err("expected three comma-separated fractions".into()),
    }
}

/// A failed command: message for standard error plus exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_IO, e.to_string())
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        Self::new(EXIT_VALIDATION, e.to_string())
    }
}

impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        let code = match e {
            ImagingError::Io(_) | ImagingError::Codec(_) => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PadError> for CliError {
    fn from(e: PadError) -> Self {
        let code = if matches!(e, PadError::Io(_)) {
            EXIT_IO
        } else {
            EXIT_VALIDATION
        };
        Self::new(code, e.to_string())
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        let code = if matches!(e, EmbedError::Io(_)) {
            EXIT_IO
        } else {
            EXIT_VALIDATION
        };
        Self::new(code, e.to_string())
    }
}

impl From<QualityError> for CliError {
    fn from(e: QualityError) -> Self {
        let code = match e {
            QualityError::Io(_) => EXIT_IO,
            QualityError::Exhausted { .. } => EXIT_EXHAUSTED,
            _ => EXIT_VALIDATION,
        };
        Self::new(code, e.to_string())
    }
}

impl From<ComposeError> for CliError {
    fn from(e: ComposeError) -> Self {
        let code = match &e {
            ComposeError::Io(_) | ComposeError::Asset(_) => EXIT_IO,
            ComposeError::Exhausted { .. } => EXIT_EXHAUSTED,
            ComposeError::Imaging(ImagingError::Io(_) | ImagingError::Codec(_)) => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        Self::new(code, e.to_string())
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::PadMetrics(a) => cmd_pad_metrics(&a),
        Command::Fid(a) => cmd_fid(&a),
        Command::Tsne(a) => cmd_tsne(&a),
        Command::DetExport(a) => cmd_det_export(&a),
        Command::ValidateLayout(a) => cmd_validate_layout(&a),
        Command::Prompts(a) => cmd_prompts(&a),
        Command::Embed(a) => cmd_embed(&a),
        Command::Fixtures(a) => cmd_fixtures(&a),
    }
}

/// Loads a layout from a file or `builtin:<id>`, returning it with the
/// directory that relative asset references resolve against.
pub fn load_layout(reference: &str) -> Result<(LayoutSpec, PathBuf), CliError> {
    if let Some(id) = reference.strip_prefix("builtin:") {
        let spec = layout::builtin_template(id)
            .ok_or_else(|| CliError::new(EXIT_USAGE, format!("unknown builtin layout {id:?}")))?;
        return Ok((spec, PathBuf::from(".")));
    }
    let path = Path::new(reference);
    let bytes = std::fs::read(path).map_err(|e| CliError::new(EXIT_IO, format!("{reference}: {e}")))?;
    let spec = layout::parse_layout(&bytes)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((spec, base))
}

/// Threshold profile by precedence: flag, then environment, then builtin.
pub fn resolve_profile(flag: Option<&Path>) -> Result<ThresholdProfile, CliError> {
    let from_env = std::env::var_os(PROFILE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    match flag.map(Path::to_path_buf).or(from_env) {
        Some(p) => {
            log::info!("threshold profile from {}", p.display());
            Ok(ThresholdProfile::load(&p)?)
        }
        None => Ok(qualitygate::default_profile()),
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let (spec, base) = load_layout(&a.layout)?;
    let prepared = PreparedLayout::new(spec, &base)?;
    let profile = resolve_profile(a.profile.as_deref())?;

    let face_paths = qualitygate::list_images(&a.faces_dir)
        .map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", a.faces_dir.display())))?;
    let accepted: Vec<PathBuf> = match &a.ofiq_csv {
        Some(csv) => {
            let table = qualitygate::load_reports(csv, None)?;
            for r in &table.rejected {
                log::warn!("quality CSV line {} ({}): {}", r.line, r.image_id, r.reason);
            }
            let mut source = qualitygate::DirFaceSource::new(&a.faces_dir, &table.reports, face_paths.len())?;
            let candidates: Vec<_> = source
                .next_batch()
                .unwrap_or_default()
                .into_iter()
                .map(|c| c.report)
                .collect();
            let outcome = qualitygate::filter_batch(&candidates, &profile);
            println!(
                "faces accepted: {}, rejected: {}",
                outcome.passed.len(),
                outcome.failed.len()
            );
            for (id, reasons) in &outcome.failed {
                log::debug!("rejected {id}: {}", reasons.join(", "));
            }
            outcome
                .passed
                .iter()
                .filter_map(|id| source.path_of(id).map(Path::to_path_buf))
                .collect()
        }
        None => {
            log::warn!("no quality CSV given; using all {} faces unfiltered", face_paths.len());
            println!("faces accepted: {}, rejected: 0", face_paths.len());
            face_paths
        }
    };
    if accepted.len() < a.count {
        return Err(CliError::new(
            EXIT_EXHAUSTED,
            format!(
                "face supply exhausted: {} requested, {} accepted",
                a.count,
                accepted.len()
            ),
        ));
    }
    let faces: Vec<AssetRef> = accepted.into_iter().take(a.count).map(AssetRef::File).collect();
    let signatures: Vec<AssetRef> = qualitygate::list_images(&a.signatures_dir)
        .map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", a.signatures_dir.display())))?
        .into_iter()
        .map(AssetRef::File)
        .collect();

    std::fs::create_dir_all(&a.out)?;
    let mut manifest = compose::generate_batch(a.seed, a.count, &prepared, &faces, &signatures, &a.out, a.jobs)?;
    if let Some(fr) = a.split {
        manifest = compose::split_assign(&manifest, fr, a.seed)?;
    }
    compose::write_manifest(&manifest, &a.out.join(compose::MANIFEST_FILE))?;
    println!("documents: {}", manifest.entries.len());
    Ok(())
}

fn load_scores(a: &ScoreArgs) -> Result<Vec<padmetrics::ScoreRecord>, CliError> {
    let file =
        std::fs::File::open(&a.scores).map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", a.scores.display())))?;
    Ok(padmetrics::read_scores(file, a.invert_polarity)?)
}

fn mode(a: &ScoreArgs) -> ApcerMode {
    if a.pooled {
        ApcerMode::Pooled
    } else {
        ApcerMode::Worst
    }
}

fn cmd_pad_metrics(a: &PadMetricsArgs) -> Result<(), CliError> {
    let records = load_scores(&a.scores)?;
    let report = padmetrics::pad_report(&records, a.threshold, mode(&a.scores))?;
    let curve = padmetrics::det_curve_with(&records, mode(&a.scores))?;
    std::fs::create_dir_all(&a.out)?;
    std::fs::write(a.out.join("pad_report.json"), report.to_json() + "\n")?;
    padmetrics::write_det_csv(&curve, std::fs::File::create(a.out.join("det.csv"))?)?;
    println!(
        "EER {:.4} at threshold {}; BPCER10 {:.4} BPCER20 {:.4} BPCER100 {:.4}",
        report.eer,
        padmetrics::format_sig9(report.eer_threshold),
        report.bpcer10,
        report.bpcer20,
        report.bpcer100
    );
    Ok(())
}

fn cmd_fid(a: &FidArgs) -> Result<(), CliError> {
    let fa = embedstats::load_features(&a.features_a)?;
    let fb = embedstats::load_features(&a.features_b)?;
    let v = embedstats::fid(&embedstats::stats(&fa), &embedstats::stats(&fb))?;
    println!("{v:.4}");
    Ok(())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_tsne(a: &TsneArgs) -> Result<(), CliError> {
    let fs = embedstats::load_features(&a.features)?;
    let cfg = TsneConfig {
        perplexity: a.perplexity,
        learning_rate: a.learning_rate,
        iterations: a.iters,
        seed: a.seed,
        ..TsneConfig::default()
    };
    let res = embedstats::tsne(&fs, &cfg)?;
    log::info!("final KL divergence {:.6}", res.kl);
    let mut w = output(a.out.as_deref())?;
    embedstats::write_embedding_csv(&res.embedding, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_det_export(a: &DetExportArgs) -> Result<(), CliError> {
    let records = load_scores(&a.scores)?;
    let curve = padmetrics::det_curve_with(&records, mode(&a.scores))?;
    let mut w = output(a.out.as_deref())?;
    padmetrics::write_det_csv(&curve, &mut w)?;
    w.flush()?;
    if let Some(svg) = &a.svg {
        std::fs::write(svg, padmetrics::det_svg(&curve))?;
    }
    Ok(())
}

fn cmd_validate_layout(a: &ValidateLayoutArgs) -> Result<(), CliError> {
    load_layout(&a.layout)?;
    println!("OK");
    Ok(())
}

fn cmd_prompts(a: &PromptsArgs) -> Result<(), CliError> {
    match a.mode {
        PromptMode::Face => {
            let (positive, negative) = persona::build_face_prompt(&persona::generate_face_attributes(a.seed));
            println!("{positive}");
            println!("{negative}");
        }
        PromptMode::Card => {
            let p = persona::generate_persona(a.seed, a.document.into());
            println!("{}", persona::build_card_prompt(&p));
        }
    }
    Ok(())
}

fn cmd_embed(a: &EmbedArgs) -> Result<(), CliError> {
    let paths = qualitygate::list_images(&a.images)?;
    let rows = paths
        .iter()
        .map(|p| RasterImage::load_png(p).map(|img| embedstats::patch_histogram_features(&img)))
        .collect::<Result<Vec<_>, _>>()?;
    let fs = FeatureSet::from_rows(&rows)?;
    fs.save(&a.out)?;
    println!("{} images, {} dimensions", fs.n(), fs.d());
    Ok(())
}

fn cmd_fixtures(a: &FixturesArgs) -> Result<(), CliError> {
    compose::fixtures::write_pools(&a.out, a.seed, a.faces, a.signatures)?;
    Ok(())
}

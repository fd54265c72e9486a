//! Command-line flags, the optional TOML config file and their merge into
//! one validated [`RunConfig`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use occfair::compositor::{Protocol, DEFAULT_OPACITY_THRESHOLD};
use occfair::fairness::DEFAULT_ALPHA;
use occfair::foir::DEFAULT_IMPORTANCE_FRACTION;
use occfair::stats::DEFAULT_SIGNIFICANCE;
use occfair::verification::ThresholdMode;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

#[derive(Debug, Parser)]
#[command(
    name = "occfair",
    version,
    about = "Fairness auditing for occluded face verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Composite seeded occlusions onto face images and write masks.
    Occlude(RunArgs),
    /// Pick a threshold and compute group rates and fairness metrics.
    Evaluate(RunArgs),
    /// Measure how much of each failure's saliency falls on the occlusion.
    Foir(RunArgs),
    /// Render tables and a chart from evaluation and FOIR reports.
    Report(RunArgs),
    /// Write a small synthetic dataset for trying the pipeline.
    Synth(SynthArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Occlude(_) => "occlude",
            Command::Evaluate(_) => "evaluate",
            Command::Foir(_) => "foir",
            Command::Report(_) => "report",
            Command::Synth(_) => "synth",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any of the options below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Verification pairs CSV: pair_id,score,ground_truth,group.
    #[arg(long)]
    pub pairs: Option<PathBuf>,

    /// Five-point landmarks CSV, one row per image.
    #[arg(long)]
    pub landmarks: Option<PathBuf>,

    /// Directory of occlusion assets (PNG plus JSON sidecar each).
    #[arg(long)]
    pub assets: Option<PathBuf>,

    /// Directory holding `<image_id>.png` for every landmarks row.
    #[arg(long)]
    pub images: Option<PathBuf>,

    /// Saliency manifest CSV: pair_id,saliency,mask.
    #[arg(long)]
    pub saliency: Option<PathBuf>,

    /// Occlusion protocol: 1 (single occlusion) or 4 (up to two).
    #[arg(long)]
    pub protocol: Option<Protocol>,

    /// Global seed; each image draws from a seed derived from it and its id.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Weight of the FMR term in FDR, IR and GARBE.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Fraction of the saliency extremum a pixel must reach to be important.
    #[arg(long)]
    pub fraction: Option<f64>,

    /// optimize-on-baseline, optimize-per-protocol or fixed:<value>.
    #[arg(long)]
    pub threshold_mode: Option<ThresholdMode>,

    /// Evaluation report of the unoccluded baseline.
    #[arg(long)]
    pub baseline_report: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Scenario label used in reports (defaults to the input file stem).
    #[arg(long)]
    pub label: Option<String>,

    /// Model name used in rendered tables.
    #[arg(long)]
    pub model: Option<String>,

    /// ANOVA significance level.
    #[arg(long)]
    pub significance: Option<f64>,

    /// Opacity above which a composited pixel counts as occluded.
    #[arg(long)]
    pub opacity_threshold: Option<f64>,

    /// Evaluation report to include (repeatable).
    #[arg(long = "report")]
    pub reports: Vec<PathBuf>,

    /// FOIR report to include (repeatable).
    #[arg(long = "foir-report")]
    pub foir_reports: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,

    /// Seed for faces, scores and saliency.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Genuine and impostor pairs per group.
    #[arg(long, default_value_t = 250)]
    pub pairs_per_group: usize,

    /// Number of face images for the occlusion stage.
    #[arg(long, default_value_t = 6)]
    pub faces: usize,
}

/// The same options as [`RunArgs`], read from TOML. Relative paths are
/// resolved against the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    pairs: Option<PathBuf>,
    landmarks: Option<PathBuf>,
    assets: Option<PathBuf>,
    images: Option<PathBuf>,
    saliency: Option<PathBuf>,
    protocol: Option<u8>,
    seed: Option<u64>,
    alpha: Option<f64>,
    fraction: Option<f64>,
    threshold_mode: Option<String>,
    baseline_report: Option<PathBuf>,
    out: Option<PathBuf>,
    label: Option<String>,
    model: Option<String>,
    significance: Option<f64>,
    opacity_threshold: Option<f64>,
    #[serde(default)]
    reports: Vec<PathBuf>,
    #[serde(default)]
    foir_reports: Vec<PathBuf>,
}

/// Fully resolved options of one run. Written verbatim into the run
/// manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub pairs: Option<PathBuf>,
    pub landmarks: Option<PathBuf>,
    pub assets: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub saliency: Option<PathBuf>,
    pub baseline_report: Option<PathBuf>,
    pub reports: Vec<PathBuf>,
    pub foir_reports: Vec<PathBuf>,
    pub out: PathBuf,
    pub protocol: Protocol,
    pub seed: u64,
    pub alpha: f64,
    pub fraction: f64,
    pub threshold_mode: ThresholdMode,
    pub significance: f64,
    pub opacity_threshold: f64,
    pub label: Option<String>,
    pub model: String,
}

fn load_config_file(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input(format!("config {}: {e}", path.display())))?;
    let mut file: ConfigFile =
        toml::from_str(&text).map_err(|e| input(format!("config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let rebase = |p: &mut Option<PathBuf>| {
        if let Some(p) = p {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    };
    rebase(&mut file.pairs);
    rebase(&mut file.landmarks);
    rebase(&mut file.assets);
    rebase(&mut file.images);
    rebase(&mut file.saliency);
    rebase(&mut file.baseline_report);
    rebase(&mut file.out);
    for p in file.reports.iter_mut().chain(file.foir_reports.iter_mut()) {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(file)
}

impl RunConfig {
    /// Merges flags over the config file over defaults, then validates.
    pub fn resolve(command: &str, args: &RunArgs) -> Result<RunConfig> {
        let file = match &args.config {
            Some(path) => load_config_file(path)?,
            None => ConfigFile::default(),
        };
        let protocol = match (args.protocol, file.protocol) {
            (Some(p), _) => p,
            (None, Some(n)) => n.to_string().parse()?,
            (None, None) => Protocol::P1,
        };
        let threshold_mode = match (args.threshold_mode, &file.threshold_mode) {
            (Some(m), _) => m,
            (None, Some(s)) => s.parse()?,
            (None, None) => ThresholdMode::OptimizeOnBaseline,
        };
        let pick = |flag: &[PathBuf], file: Vec<PathBuf>| {
            if flag.is_empty() {
                file
            } else {
                flag.to_vec()
            }
        };
        let config = RunConfig {
            command: command.to_string(),
            pairs: args.pairs.clone().or(file.pairs),
            landmarks: args.landmarks.clone().or(file.landmarks),
            assets: args.assets.clone().or(file.assets),
            images: args.images.clone().or(file.images),
            saliency: args.saliency.clone().or(file.saliency),
            baseline_report: args.baseline_report.clone().or(file.baseline_report),
            reports: pick(&args.reports, file.reports),
            foir_reports: pick(&args.foir_reports, file.foir_reports),
            out: args
                .out
                .clone()
                .or(file.out)
                .ok_or_else(|| input(format!("--out is required for `{command}`")))?,
            protocol,
            seed: args.seed.or(file.seed).unwrap_or(0),
            alpha: args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
            fraction: args
                .fraction
                .or(file.fraction)
                .unwrap_or(DEFAULT_IMPORTANCE_FRACTION),
            threshold_mode,
            significance: args
                .significance
                .or(file.significance)
                .unwrap_or(DEFAULT_SIGNIFICANCE),
            opacity_threshold: args
                .opacity_threshold
                .or(file.opacity_threshold)
                .unwrap_or(DEFAULT_OPACITY_THRESHOLD),
            label: args.label.clone().or(file.label),
            model: args
                .model
                .clone()
                .or(file.model)
                .unwrap_or_else(|| "model".into()),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(input(format!("--alpha {} is outside [0, 1]", self.alpha)));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(input(format!(
                "--fraction {} is outside (0, 1]",
                self.fraction
            )));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(input(format!(
                "--significance {} is outside (0, 1)",
                self.significance
            )));
        }
        if !(0.0..1.0).contains(&self.opacity_threshold) {
            return Err(input(format!(
                "--opacity-threshold {} is outside [0, 1)",
                self.opacity_threshold
            )));
        }
        let required: &[(&str, &Option<PathBuf>)] = match self.command.as_str() {
            "occlude" => &[
                ("--images", &self.images),
                ("--landmarks", &self.landmarks),
                ("--assets", &self.assets),
            ],
            "evaluate" => &[("--pairs", &self.pairs)],
            "foir" => &[("--pairs", &self.pairs), ("--saliency", &self.saliency)],
            _ => &[],
        };
        for (flag, value) in required {
            let path = value
                .as_ref()
                .ok_or_else(|| input(format!("{flag} is required for `{}`", self.command)))?;
            must_exist(flag, path)?;
        }
        if let Some(p) = &self.baseline_report {
            must_exist("--baseline-report", p)?;
        }
        if self.command == "report" && self.reports.is_empty() && self.foir_reports.is_empty() {
            return Err(input(
                "`report` needs at least one --report or --foir-report",
            ));
        }
        for p in self.reports.iter().chain(&self.foir_reports) {
            must_exist("report", p)?;
        }
        Ok(())
    }

    pub fn label_for(&self, path: &Path) -> String {
        self.label.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into())
        })
    }
}

fn must_exist(flag: &str, path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(input(format!("{flag}: {} does not exist", path.display())))
    }
}

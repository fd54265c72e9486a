mod evaluate;
mod foir;
mod occlude;
mod report;
mod synth;

use std::path::Path;

use occfair::report::EvaluationReport;
use occfair::verification::{
    evaluate_at, optimize_threshold, CandidateGrid, PairRecord, ThresholdMode, ThresholdResult,
};

use crate::config::{Cli, Command, RunConfig};
use crate::error::{input, Result};

pub use foir::FoirReport;

pub fn run(cli: Cli) -> Result<()> {
    let name = cli.command.name();
    match &cli.command {
        Command::Occlude(args) => occlude::run(&RunConfig::resolve(name, args)?),
        Command::Evaluate(args) => evaluate::run(&RunConfig::resolve(name, args)?),
        Command::Foir(args) => foir::run(&RunConfig::resolve(name, args)?),
        Command::Report(args) => report::run(&RunConfig::resolve(name, args)?),
        Command::Synth(args) => synth::run(args),
    }
}

pub fn load_evaluation_report(path: &Path) -> Result<EvaluationReport> {
    let text =
        std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        input(format!(
            "{} is not an evaluation report: {e}",
            path.display()
        ))
    })
}

/// The operating threshold under `mode`. With `OptimizeOnBaseline` the
/// baseline report's threshold is reused when one is given; otherwise the
/// pairs are treated as the baseline and optimized.
pub fn resolve_threshold(
    mode: ThresholdMode,
    pairs: &[PairRecord],
    baseline: Option<&EvaluationReport>,
) -> Result<ThresholdResult> {
    let result = match (mode, baseline) {
        (ThresholdMode::OptimizeOnBaseline, Some(b)) => evaluate_at(pairs, b.threshold.threshold)?,
        (ThresholdMode::OptimizeOnBaseline, None) | (ThresholdMode::OptimizePerProtocol, _) => {
            optimize_threshold(pairs, &CandidateGrid::Midpoints)?
        }
        (ThresholdMode::Fixed(t), _) => evaluate_at(pairs, t)?,
    };
    Ok(result)
}

/// Creates the output directory and returns it.
fn prepare_out(config: &RunConfig) -> Result<&Path> {
    std::fs::create_dir_all(&config.out)
        .map_err(|e| input(format!("--out {}: {e}", config.out.display())))?;
    Ok(&config.out)
}

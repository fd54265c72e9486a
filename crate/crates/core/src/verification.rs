//! Pair ingestion, per-group confusion rates and operating-threshold selection.
//!
//! Scores are similarities: a pair is declared a match when its score is at
//! or above the threshold. The match decision is the positive class, so the
//! true positive rate is `1 - fnmr` and the false positive rate is `fmr`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::population_std;

/// Objective values within this distance of the maximum count as ties.
/// Ties resolve to the smallest threshold.
pub const OBJECTIVE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruth {
    Genuine,
    Impostor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Match,
    NonMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    pub score: f64,
    pub ground_truth: GroundTruth,
    pub group: String,
}

impl PairRecord {
    pub fn new(
        pair_id: impl Into<String>,
        score: f64,
        ground_truth: GroundTruth,
        group: impl Into<String>,
    ) -> Self {
        PairRecord {
            pair_id: pair_id.into(),
            score,
            ground_truth,
            group: group.into(),
        }
    }
}

pub fn classify(score: f64, threshold: f64) -> Result<Decision> {
    if !score.is_finite() || !threshold.is_finite() {
        return Err(Error::InvalidInput(format!(
            "score ({score}) and threshold ({threshold}) must be finite"
        )));
    }
    Ok(if score >= threshold {
        Decision::Match
    } else {
        Decision::NonMatch
    })
}

/// Checks the dataset-level invariants: finite scores and unique pair ids.
pub fn validate_pairs(pairs: &[PairRecord]) -> Result<()> {
    let mut seen = HashSet::with_capacity(pairs.len());
    for pair in pairs {
        if !pair.score.is_finite() {
            return Err(Error::InvalidInput(format!(
                "pair `{}` has a non-finite score",
                pair.pair_id
            )));
        }
        if !seen.insert(pair.pair_id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "duplicate pair id `{}`",
                pair.pair_id
            )));
        }
    }
    Ok(())
}

/// Raw decision counts for one group at one threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupCounts {
    pub genuine: u64,
    pub impostor: u64,
    pub false_non_match: u64,
    pub false_match: u64,
}

impl GroupCounts {
    pub fn total(&self) -> u64 {
        self.genuine + self.impostor
    }

    pub fn correct(&self) -> u64 {
        self.total() - self.false_non_match - self.false_match
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub group: String,
    pub n_genuine: u64,
    pub n_impostor: u64,
    pub accuracy: f64,
    pub fmr: f64,
    pub fnmr: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub selection_rate: f64,
}

impl GroupRates {
    pub fn from_counts(group: impl Into<String>, counts: GroupCounts) -> Result<Self> {
        let group = group.into();
        if counts.genuine == 0 || counts.impostor == 0 {
            let reason = if counts.genuine == 0 {
                "no genuine pairs"
            } else {
                "no impostor pairs"
            };
            return Err(Error::DegenerateGroup {
                group,
                reason: reason.to_string(),
            });
        }
        let genuine = counts.genuine as f64;
        let impostor = counts.impostor as f64;
        let total = counts.total() as f64;
        let fmr = counts.false_match as f64 / impostor;
        let fnmr = counts.false_non_match as f64 / genuine;
        let matches = (counts.genuine - counts.false_non_match) + counts.false_match;
        Ok(GroupRates {
            group,
            n_genuine: counts.genuine,
            n_impostor: counts.impostor,
            accuracy: counts.correct() as f64 / total,
            fmr,
            fnmr,
            tpr: 1.0 - fnmr,
            fpr: fmr,
            selection_rate: matches as f64 / total,
        })
    }

    /// Builds rates from a published summary where pair counts are unknown.
    ///
    /// Accuracy is taken as given (it need not agree with the rounded error
    /// rates). Counts are recorded as zero and the selection rate assumes
    /// balanced genuine and impostor lists.
    pub fn from_summary(group: impl Into<String>, accuracy: f64, fmr: f64, fnmr: f64) -> Self {
        GroupRates {
            group: group.into(),
            n_genuine: 0,
            n_impostor: 0,
            accuracy,
            fmr,
            fnmr,
            tpr: 1.0 - fnmr,
            fpr: fmr,
            selection_rate: 0.5 * (1.0 - fnmr) + 0.5 * fmr,
        }
    }

    pub fn error(&self) -> f64 {
        1.0 - self.accuracy
    }
}

fn count_by_group(pairs: &[PairRecord], threshold: f64) -> Result<BTreeMap<&str, GroupCounts>> {
    let mut counts: BTreeMap<&str, GroupCounts> = BTreeMap::new();
    for pair in pairs {
        let decision = classify(pair.score, threshold)?;
        let entry = counts.entry(pair.group.as_str()).or_default();
        match (pair.ground_truth, decision) {
            (GroundTruth::Genuine, Decision::Match) => entry.genuine += 1,
            (GroundTruth::Genuine, Decision::NonMatch) => {
                entry.genuine += 1;
                entry.false_non_match += 1;
            }
            (GroundTruth::Impostor, Decision::Match) => {
                entry.impostor += 1;
                entry.false_match += 1;
            }
            (GroundTruth::Impostor, Decision::NonMatch) => entry.impostor += 1,
        }
    }
    Ok(counts)
}

/// Per-group rates at `threshold`, one entry per distinct group in
/// lexicographic group order.
pub fn group_rates(pairs: &[PairRecord], threshold: f64) -> Result<Vec<GroupRates>> {
    count_by_group(pairs, threshold)?
        .into_iter()
        .map(|(group, counts)| GroupRates::from_counts(group, counts))
        .collect()
}

/// Fraction of all pairs classified correctly at `threshold`.
pub fn overall_accuracy(pairs: &[PairRecord], threshold: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs".into()));
    }
    let mut correct = 0u64;
    for pair in pairs {
        let decision = classify(pair.score, threshold)?;
        let ok = matches!(
            (pair.ground_truth, decision),
            (GroundTruth::Genuine, Decision::Match) | (GroundTruth::Impostor, Decision::NonMatch)
        );
        correct += u64::from(ok);
    }
    Ok(correct as f64 / pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub threshold: f64,
    pub overall_accuracy: f64,
    pub per_group: Vec<GroupRates>,
    pub objective_value: f64,
}

/// Which thresholds `optimize_threshold` considers.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum CandidateGrid {
    /// Midpoints between consecutive distinct scores plus one point below
    /// the minimum and one above the maximum.
    #[default]
    Midpoints,
    Explicit(Vec<f64>),
}

/// How the operating threshold of an occluded protocol is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Optimize on the unoccluded baseline and reuse the threshold.
    OptimizeOnBaseline,
    /// Re-optimize on each protocol's own pairs.
    OptimizePerProtocol,
    Fixed(f64),
}

impl std::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimize-on-baseline" | "baseline" => Ok(ThresholdMode::OptimizeOnBaseline),
            "optimize-per-protocol" | "per-protocol" => Ok(ThresholdMode::OptimizePerProtocol),
            other => {
                let value = other
                    .strip_prefix("fixed:")
                    .or_else(|| other.strip_prefix("fixed="))
                    .ok_or_else(|| {
                        Error::param(
                            "threshold-mode",
                            format!(
                                "`{other}` is not one of optimize-on-baseline, \
                                 optimize-per-protocol, fixed:<value>"
                            ),
                        )
                    })?;
                let value: f64 = value
                    .parse()
                    .map_err(|_| Error::param("threshold-mode", format!("bad value `{value}`")))?;
                if !value.is_finite() {
                    return Err(Error::param("threshold-mode", "threshold must be finite"));
                }
                Ok(ThresholdMode::Fixed(value))
            }
        }
    }
}

impl std::fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdMode::OptimizeOnBaseline => f.write_str("optimize-on-baseline"),
            ThresholdMode::OptimizePerProtocol => f.write_str("optimize-per-protocol"),
            ThresholdMode::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

/// Difference between overall accuracy and the population standard
/// deviation of per-group accuracies, all as fractions.
pub fn objective(overall_accuracy: f64, per_group: &[GroupRates]) -> f64 {
    let accuracies: Vec<f64> = per_group.iter().map(|r| r.accuracy).collect();
    overall_accuracy - population_std(&accuracies)
}

/// Full result at a given threshold without any search.
pub fn evaluate_at(pairs: &[PairRecord], threshold: f64) -> Result<ThresholdResult> {
    let per_group = group_rates(pairs, threshold)?;
    let overall_accuracy = overall_accuracy(pairs, threshold)?;
    Ok(ThresholdResult {
        threshold,
        overall_accuracy,
        objective_value: objective(overall_accuracy, &per_group),
        per_group,
    })
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    // Adjacent floats can round the midpoint down onto `lo`, which would
    // change which pairs it separates.
    if mid <= lo {
        hi
    } else {
        mid
    }
}

fn distinct_sorted_scores(pairs: &[PairRecord]) -> Vec<f64> {
    let mut scores: Vec<f64> = pairs.iter().map(|p| p.score).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    scores
}

/// The default candidate grid in ascending order.
pub fn candidate_thresholds(pairs: &[PairRecord]) -> Result<Vec<f64>> {
    validate_pairs(pairs)?;
    let scores = distinct_sorted_scores(pairs);
    if scores.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "threshold search needs at least 2 distinct scores, got {}",
            scores.len()
        )));
    }
    Ok(grid_from_scores(&scores))
}

fn grid_from_scores(scores: &[f64]) -> Vec<f64> {
    let first = scores[0];
    let last = scores[scores.len() - 1];
    let mut grid = Vec::with_capacity(scores.len() + 1);
    grid.push(first - first.abs().max(1.0));
    grid.extend(scores.windows(2).map(|w| midpoint(w[0], w[1])));
    grid.push(last + last.abs().max(1.0));
    grid
}

fn pick_best(values: &[f64]) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .position(|&v| v >= best - OBJECTIVE_TIE_TOLERANCE)
        .expect("non-empty objective list")
}

/// Selects the threshold maximizing overall accuracy minus the spread of
/// per-group accuracies. Ties go to the smallest threshold.
pub fn optimize_threshold(pairs: &[PairRecord], grid: &CandidateGrid) -> Result<ThresholdResult> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs to optimize over".into()));
    }
    validate_pairs(pairs)?;
    match grid {
        CandidateGrid::Midpoints => optimize_by_sweep(pairs),
        CandidateGrid::Explicit(candidates) => {
            if candidates.is_empty() {
                return Err(Error::InvalidInput("empty candidate grid".into()));
            }
            let mut sorted = candidates.clone();
            sorted.sort_by(f64::total_cmp);
            let results = sorted
                .iter()
                .map(|&t| evaluate_at(pairs, t))
                .collect::<Result<Vec<_>>>()?;
            let values: Vec<f64> = results.iter().map(|r| r.objective_value).collect();
            Ok(results.into_iter().nth(pick_best(&values)).unwrap())
        }
    }
}

/// Sweeps the midpoint grid in score order, updating per-group counts as
/// each distinct score crosses from Match to NonMatch.
fn optimize_by_sweep(pairs: &[PairRecord]) -> Result<ThresholdResult> {
    let mut group_names: Vec<&str> = pairs.iter().map(|p| p.group.as_str()).collect();
    group_names.sort_unstable();
    group_names.dedup();
    let index_of = |g: &str| group_names.binary_search(&g).unwrap();

    let mut order: Vec<(f64, usize, GroundTruth)> = pairs
        .iter()
        .map(|p| (p.score, index_of(&p.group), p.ground_truth))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Below the minimum score everything is a match.
    let mut counts = vec![GroupCounts::default(); group_names.len()];
    for &(_, g, truth) in &order {
        match truth {
            GroundTruth::Genuine => counts[g].genuine += 1,
            GroundTruth::Impostor => {
                counts[g].impostor += 1;
                counts[g].false_match += 1;
            }
        }
    }
    for (name, c) in group_names.iter().zip(&counts) {
        GroupRates::from_counts(*name, *c)?;
    }

    let scores = distinct_sorted_scores(pairs);
    if scores.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "threshold search needs at least 2 distinct scores, got {}",
            scores.len()
        )));
    }
    let grid = grid_from_scores(&scores);
    let total = pairs.len() as f64;

    let evaluate = |counts: &[GroupCounts]| -> f64 {
        let correct: u64 = counts.iter().map(GroupCounts::correct).sum();
        let accuracies: Vec<f64> = counts
            .iter()
            .map(|c| c.correct() as f64 / c.total() as f64)
            .collect();
        correct as f64 / total - population_std(&accuracies)
    };

    let mut values = Vec::with_capacity(grid.len());
    values.push(evaluate(&counts));
    let mut cursor = 0;
    for &score in &scores {
        // Crossing `score`: every pair with this score becomes NonMatch.
        while cursor < order.len() && order[cursor].0 == score {
            let (_, g, truth) = order[cursor];
            match truth {
                GroundTruth::Genuine => counts[g].false_non_match += 1,
                GroundTruth::Impostor => counts[g].false_match -= 1,
            }
            cursor += 1;
        }
        values.push(evaluate(&counts));
    }
    debug_assert_eq!(values.len(), grid.len());

    let best = pick_best(&values);
    evaluate_at(pairs, grid[best])
}

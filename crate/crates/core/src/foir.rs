//! Overlap between decision-supporting saliency and synthetic occlusions.
//!
//! A pixel is important when its attribution points in the direction of the
//! decision and reaches at least `fraction` of the extremal attribution in
//! that direction. The face occlusion impact ratio (FOIR) of a pair is the
//! share of its important pixels that lie on the occlusion mask.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{one_way_anova_at, AnovaResult};
use crate::verification::{classify, validate_pairs, Decision, GroundTruth, PairRecord};

pub const DEFAULT_IMPORTANCE_FRACTION: f64 = 0.6;

/// Signed per-pixel attribution, row-major from the top-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width * height != values.len() {
            return Err(Error::Shape(format!(
                "saliency map declares {width}x{height} but holds {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "saliency map contains non-finite values".into(),
            ));
        }
        Ok(SaliencyMap {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Binary occlusion raster, `true` where a synthetic occlusion was applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcclusionMask {
    width: usize,
    height: usize,
    occluded: Vec<bool>,
}

impl OcclusionMask {
    pub fn new(width: usize, height: usize, occluded: Vec<bool>) -> Result<Self> {
        if width * height != occluded.len() {
            return Err(Error::Shape(format!(
                "mask declares {width}x{height} but holds {} pixels",
                occluded.len()
            )));
        }
        Ok(OcclusionMask {
            width,
            height,
            occluded,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        OcclusionMask {
            width,
            height,
            occluded: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[bool] {
        &self.occluded
    }

    pub fn pixels_mut(&mut self) -> &mut [bool] {
        &mut self.occluded
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.occluded[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.occluded.iter().filter(|&&o| o).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.occluded.iter().any(|&o| o)
    }

    /// In-place union with another mask of the same shape.
    pub fn union_with(&mut self, other: &OcclusionMask) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Shape("cannot union masks of different sizes".into()));
        }
        for (a, b) in self.occluded.iter_mut().zip(&other.occluded) {
            *a |= *b;
        }
        Ok(())
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(
            "fraction",
            format!("{fraction} is outside (0, 1]"),
        ));
    }
    Ok(())
}

/// Indices of the important pixels for `decision`, in ascending order.
///
/// The threshold is inclusive. An empty result means no pixel supports the
/// decision direction.
pub fn important_pixels(
    map: &SaliencyMap,
    decision: Decision,
    fraction: f64,
) -> Result<Vec<usize>> {
    check_fraction(fraction)?;
    if map.values.is_empty() {
        return Err(Error::InvalidInput("saliency map is empty".into()));
    }
    let pixels = match decision {
        Decision::Match => {
            let max = map.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max <= 0.0 {
                return Ok(Vec::new());
            }
            let cut = fraction * max;
            map.values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v >= cut)
                .map(|(i, _)| i)
                .collect()
        }
        Decision::NonMatch => {
            let min = map.values.iter().copied().fold(f64::INFINITY, f64::min);
            if min >= 0.0 {
                return Ok(Vec::new());
            }
            let cut = fraction * min;
            map.values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v <= cut)
                .map(|(i, _)| i)
                .collect()
        }
    };
    Ok(pixels)
}

/// Overlap of the important pixels with the occlusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoirMeasurement {
    pub important: usize,
    pub overlapping: usize,
}

impl FoirMeasurement {
    /// `None` when there are no important pixels.
    pub fn ratio(&self) -> Option<f64> {
        (self.important > 0).then(|| self.overlapping as f64 / self.important as f64)
    }
}

pub fn measure_foir(
    map: &SaliencyMap,
    mask: &OcclusionMask,
    decision: Decision,
    fraction: f64,
) -> Result<FoirMeasurement> {
    if (map.width, map.height) != (mask.width, mask.height) {
        return Err(Error::Shape(format!(
            "saliency map is {}x{} but mask is {}x{}",
            map.width, map.height, mask.width, mask.height
        )));
    }
    let ip = important_pixels(map, decision, fraction)?;
    let overlapping = ip.iter().filter(|&&i| mask.occluded[i]).count();
    Ok(FoirMeasurement {
        important: ip.len(),
        overlapping,
    })
}

/// `|IP ∩ O| / |IP|`, or `None` when the decision has no important pixels.
pub fn foir(
    map: &SaliencyMap,
    mask: &OcclusionMask,
    decision: Decision,
    fraction: f64,
) -> Result<Option<f64>> {
    Ok(measure_foir(map, mask, decision, fraction)?.ratio())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    TrueMatch,
    TrueNonMatch,
    FalseMatch,
    FalseNonMatch,
}

impl Outcome {
    pub fn from_parts(truth: GroundTruth, decision: Decision) -> Self {
        match (truth, decision) {
            (GroundTruth::Genuine, Decision::Match) => Outcome::TrueMatch,
            (GroundTruth::Genuine, Decision::NonMatch) => Outcome::FalseNonMatch,
            (GroundTruth::Impostor, Decision::Match) => Outcome::FalseMatch,
            (GroundTruth::Impostor, Decision::NonMatch) => Outcome::TrueNonMatch,
        }
    }

    pub fn decision(self) -> Decision {
        match self {
            Outcome::TrueMatch | Outcome::FalseMatch => Decision::Match,
            Outcome::TrueNonMatch | Outcome::FalseNonMatch => Decision::NonMatch,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Outcome::TrueMatch => "TM",
            Outcome::TrueNonMatch => "TN",
            Outcome::FalseMatch => "FM",
            Outcome::FalseNonMatch => "FNM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub pair_id: String,
    pub group: String,
    pub outcome: Outcome,
    pub foir: Option<f64>,
    pub important_pixel_count: usize,
}

impl OutcomeRecord {
    /// Measures FOIR on the probe's saliency map in the direction of this
    /// record's decision.
    pub fn attach_foir(
        &mut self,
        map: &SaliencyMap,
        mask: &OcclusionMask,
        fraction: f64,
    ) -> Result<()> {
        let m = measure_foir(map, mask, self.outcome.decision(), fraction)?;
        self.important_pixel_count = m.important;
        self.foir = m.ratio();
        Ok(())
    }
}

/// Labels each pair with its outcome. FOIR fields start empty.
pub fn classify_outcomes(pairs: &[PairRecord], threshold: f64) -> Result<Vec<OutcomeRecord>> {
    validate_pairs(pairs)?;
    pairs
        .iter()
        .map(|p| {
            Ok(OutcomeRecord {
                pair_id: p.pair_id.clone(),
                group: p.group.clone(),
                outcome: Outcome::from_parts(p.ground_truth, classify(p.score, threshold)?),
                foir: None,
                important_pixel_count: 0,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoirCell {
    pub group: String,
    /// Mean FOIR in percent; `None` when the cell has no defined samples.
    pub mean_percent: Option<f64>,
    pub n: usize,
    /// Records in this cell whose FOIR was undefined.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratumTest {
    Anova(AnovaResult),
    NotApplicable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoirStratum {
    pub outcome: Outcome,
    pub cells: Vec<FoirCell>,
    pub test: StratumTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoirTable {
    pub groups: Vec<String>,
    pub significance: f64,
    pub strata: Vec<FoirStratum>,
    pub excluded_total: usize,
}

impl FoirTable {
    pub fn stratum(&self, outcome: Outcome) -> Option<&FoirStratum> {
        self.strata.iter().find(|s| s.outcome == outcome)
    }
}

/// Mean FOIR per group for the false-match and false-non-match strata, each
/// with a one-way ANOVA across the groups that have at least one sample.
///
/// `group_order` fixes the column order; groups seen only in `records` are
/// appended in lexicographic order.
pub fn aggregate_foir(
    records: &[OutcomeRecord],
    group_order: &[String],
    significance: f64,
) -> FoirTable {
    let mut groups: Vec<String> = group_order.to_vec();
    let mut extra: Vec<&str> = records
        .iter()
        .map(|r| r.group.as_str())
        .filter(|g| !group_order.iter().any(|o| o == g))
        .collect();
    extra.sort_unstable();
    extra.dedup();
    groups.extend(extra.into_iter().map(String::from));

    let mut excluded_total = 0;
    let strata = [Outcome::FalseMatch, Outcome::FalseNonMatch]
        .into_iter()
        .map(|outcome| {
            let mut samples: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            let mut excluded: BTreeMap<&str, usize> = BTreeMap::new();
            for r in records.iter().filter(|r| r.outcome == outcome) {
                match r.foir {
                    Some(v) => samples.entry(r.group.as_str()).or_default().push(v),
                    None => *excluded.entry(r.group.as_str()).or_default() += 1,
                }
            }
            excluded_total += excluded.values().sum::<usize>();

            let cells = groups
                .iter()
                .map(|g| {
                    let s = samples.get(g.as_str()).map(Vec::as_slice).unwrap_or(&[]);
                    FoirCell {
                        group: g.clone(),
                        mean_percent: (!s.is_empty())
                            .then(|| 100.0 * s.iter().sum::<f64>() / s.len() as f64),
                        n: s.len(),
                        excluded: excluded.get(g.as_str()).copied().unwrap_or(0),
                    }
                })
                .collect();

            let populated: Vec<Vec<f64>> = groups
                .iter()
                .filter_map(|g| samples.get(g.as_str()).cloned())
                .collect();
            let test = if populated.len() < 2 {
                StratumTest::NotApplicable {
                    reason: format!("{} populated group(s)", populated.len()),
                }
            } else {
                match one_way_anova_at(&populated, significance) {
                    Ok(a) => StratumTest::Anova(a),
                    Err(e) => StratumTest::NotApplicable {
                        reason: e.to_string(),
                    },
                }
            };
            FoirStratum {
                outcome,
                cells,
                test,
            }
        })
        .collect();

    FoirTable {
        groups,
        significance,
        strata,
        excluded_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(values: &[f64]) -> SaliencyMap {
        SaliencyMap::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn important_pixels_match_direction() {
        let m = map(&[1.0, 0.7, 0.5, -0.2]);
        assert_eq!(
            important_pixels(&m, Decision::Match, 0.6).unwrap(),
            vec![0, 1]
        );
        let neg = map(&[-1.0, -0.3]);
        assert!(important_pixels(&neg, Decision::Match, 0.6)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn important_pixels_non_match_direction() {
        let m = map(&[-1.0, -0.59, 0.3]);
        assert_eq!(
            important_pixels(&m, Decision::NonMatch, 0.6).unwrap(),
            vec![0]
        );
        let pos = map(&[0.0, 0.3]);
        assert!(important_pixels(&pos, Decision::NonMatch, 0.6)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn boundary_is_inclusive() {
        let m = map(&[1.0, 0.5]);
        assert_eq!(
            important_pixels(&m, Decision::Match, 0.5).unwrap(),
            vec![0, 1]
        );
    }

    #[test]
    fn invalid_inputs() {
        assert!(SaliencyMap::new(2, 1, vec![0.1, f64::NAN]).is_err());
        assert!(SaliencyMap::new(3, 1, vec![0.1, 0.2]).is_err());
        let m = map(&[1.0]);
        assert!(important_pixels(&m, Decision::Match, 0.0).is_err());
        assert!(important_pixels(&m, Decision::Match, 1.1).is_err());
        let empty = SaliencyMap::new(0, 0, vec![]).unwrap();
        assert!(important_pixels(&empty, Decision::Match, 0.6).is_err());
    }

    #[test]
    fn foir_examples() {
        let m = map(&[1.0, 0.8, 0.7, 0.1]);
        let mask = OcclusionMask::new(4, 1, vec![true, false, true, true]).unwrap();
        let v = foir(&m, &mask, Decision::Match, 0.6).unwrap().unwrap();
        assert_eq!(v, 2.0 / 3.0);

        let full = OcclusionMask::new(4, 1, vec![true, true, true, false]).unwrap();
        assert_eq!(foir(&m, &full, Decision::Match, 0.6).unwrap(), Some(1.0));
        assert_eq!(
            foir(&m, &OcclusionMask::empty(4, 1), Decision::Match, 0.6).unwrap(),
            Some(0.0)
        );
        assert_eq!(
            foir(&m, &OcclusionMask::empty(4, 1), Decision::NonMatch, 0.6).unwrap(),
            None
        );
        assert!(matches!(
            foir(&m, &OcclusionMask::empty(2, 2), Decision::Match, 0.6),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn outcome_truth_table() {
        use Decision::*;
        use GroundTruth::*;
        assert_eq!(Outcome::from_parts(Genuine, Match), Outcome::TrueMatch);
        assert_eq!(
            Outcome::from_parts(Genuine, NonMatch),
            Outcome::FalseNonMatch
        );
        assert_eq!(Outcome::from_parts(Impostor, Match), Outcome::FalseMatch);
        assert_eq!(
            Outcome::from_parts(Impostor, NonMatch),
            Outcome::TrueNonMatch
        );

        let pairs = vec![
            PairRecord::new("a", 0.3, Genuine, "X"),
            PairRecord::new("b", 0.8, Impostor, "X"),
        ];
        let out = classify_outcomes(&pairs, 0.5).unwrap();
        assert_eq!(out[0].outcome, Outcome::FalseNonMatch);
        assert_eq!(out[1].outcome, Outcome::FalseMatch);
    }

    fn rec(id: &str, group: &str, outcome: Outcome, foir: Option<f64>) -> OutcomeRecord {
        OutcomeRecord {
            pair_id: id.into(),
            group: group.into(),
            outcome,
            foir,
            important_pixel_count: usize::from(foir.is_some()),
        }
    }

    #[test]
    fn aggregate_single_group_mean() {
        let records = vec![
            rec("1", "A", Outcome::FalseNonMatch, Some(0.4)),
            rec("2", "A", Outcome::FalseNonMatch, Some(0.6)),
            rec("3", "A", Outcome::TrueMatch, Some(0.9)),
        ];
        let t = aggregate_foir(&records, &["A".into()], 0.05);
        let fnm = t.stratum(Outcome::FalseNonMatch).unwrap();
        assert!((fnm.cells[0].mean_percent.unwrap() - 50.0).abs() < 1e-12);
        assert!(matches!(fnm.test, StratumTest::NotApplicable { .. }));
        let fm = t.stratum(Outcome::FalseMatch).unwrap();
        assert_eq!(fm.cells[0].mean_percent, None);
    }

    #[test]
    fn aggregate_counts_undefined() {
        let records = vec![
            rec("1", "A", Outcome::FalseMatch, None),
            rec("2", "A", Outcome::FalseMatch, None),
        ];
        let t = aggregate_foir(&records, &[], 0.05);
        let fm = t.stratum(Outcome::FalseMatch).unwrap();
        assert_eq!(fm.cells[0].mean_percent, None);
        assert_eq!(fm.cells[0].excluded, 2);
        assert_eq!(t.excluded_total, 2);
    }

    #[test]
    fn aggregate_runs_anova_across_groups() {
        let mut records = Vec::new();
        for (g, base) in [("Af", 0.5), ("As", 0.3), ("Ca", 0.4), ("In", 0.45)] {
            for i in 0..5 {
                let v = base + 0.01 * i as f64;
                records.push(rec(&format!("{g}{i}"), g, Outcome::FalseNonMatch, Some(v)));
            }
        }
        let order: Vec<String> = ["Af", "As", "Ca", "In"].map(String::from).to_vec();
        let t = aggregate_foir(&records, &order, 0.05);
        let fnm = t.stratum(Outcome::FalseNonMatch).unwrap();
        assert_eq!(fnm.cells.len(), 4);
        match &fnm.test {
            StratumTest::Anova(a) => {
                assert!(a.significant_at_05);
                assert_eq!((a.df_between, a.df_within), (3, 16));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

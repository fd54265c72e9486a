//! Group-fairness metrics over per-group verification rates.
//!
//! Rates are fractions in `[0, 1]`. The accuracy spread (`std_accuracy`) and
//! the error range (`delta_err`) are reported in percentage points.
//!
//! | metric | range | fairer |
//! |--------|-------|--------|
//! | STD    | `[0, ∞)` | lower |
//! | SER    | `[1, ∞)` | lower |
//! | FDR    | `[0, 1]` | higher |
//! | IR     | `[1, ∞)` | lower |
//! | GARBE  | `[0, 1]` | lower |
//! | DP     | `[0, 1]` | lower |
//! | EO     | `[0, 1]` | lower |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::population_std;
use crate::verification::GroupRates;

pub const DEFAULT_ALPHA: f64 = 0.5;

fn require_groups(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InsufficientGroups { needed: 2, got: n });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} is outside [0, 1]")));
    }
    Ok(())
}

fn extremes(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

/// `max_{i,j} |x_i - x_j|`, which is the range of the sample.
pub fn max_pairwise_gap(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let (lo, hi) = extremes(values.iter().copied());
    hi - lo
}

/// `Σ_i Σ_j |x_i - x_j| / n²` over ordered pairs, diagonal included.
pub fn mean_absolute_difference(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for a in values {
        for b in values {
            total += (a - b).abs();
        }
    }
    total / (n * n) as f64
}

fn column(rates: &[GroupRates], f: impl Fn(&GroupRates) -> f64) -> Vec<f64> {
    rates.iter().map(f).collect()
}

pub fn std_accuracy(rates: &[GroupRates]) -> Result<f64> {
    require_groups(rates.len())?;
    let acc = column(rates, |r| 100.0 * r.accuracy);
    Ok(population_std(&acc))
}

/// Skewed error ratio: largest group error over smallest group error.
pub fn ser(rates: &[GroupRates]) -> Result<f64> {
    require_groups(rates.len())?;
    let (lo, hi) = extremes(rates.iter().map(GroupRates::error));
    if lo <= 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "SER",
            reason: "a group has zero error".into(),
        });
    }
    Ok(hi / lo)
}

pub fn fdr(rates: &[GroupRates], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    require_groups(rates.len())?;
    let a = max_pairwise_gap(&column(rates, |r| r.fmr));
    let b = max_pairwise_gap(&column(rates, |r| r.fnmr));
    Ok(1.0 - (alpha * a + (1.0 - alpha) * b))
}

/// Ratio of the largest to the smallest value, used by the inequity rate.
pub fn max_min_ratio(values: &[f64], metric: &'static str) -> Result<f64> {
    let (lo, hi) = extremes(values.iter().copied());
    if lo <= 0.0 {
        return Err(Error::UndefinedMetric {
            metric,
            reason: "minimum rate across groups is zero".into(),
        });
    }
    Ok(hi / lo)
}

pub fn ir(rates: &[GroupRates], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    require_groups(rates.len())?;
    let a = max_min_ratio(&column(rates, |r| r.fmr), "IR (FMR ratio)")?;
    let b = max_min_ratio(&column(rates, |r| r.fnmr), "IR (FNMR ratio)")?;
    Ok(a.powf(alpha) * b.powf(1.0 - alpha))
}

/// Gini coefficient with the `n / (n - 1)` small-sample normalization, so a
/// sample concentrated in a single element scores exactly 1.
pub fn gini(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientGroups { needed: 2, got: n });
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidInput(
            "gini needs finite non-negative values".into(),
        ));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if mean <= 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "Gini",
            reason: "sample mean is zero".into(),
        });
    }
    let nf = n as f64;
    Ok(nf / (nf - 1.0) * mean_absolute_difference(values) / (2.0 * mean))
}

pub fn garbe(rates: &[GroupRates], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let g_fmr = gini(&column(rates, |r| r.fmr))?;
    let g_fnmr = gini(&column(rates, |r| r.fnmr))?;
    Ok(alpha * g_fmr + (1.0 - alpha) * g_fnmr)
}

/// Demographic parity difference over selection rates.
pub fn dp_difference(rates: &[GroupRates]) -> Result<f64> {
    require_groups(rates.len())?;
    Ok(max_pairwise_gap(&column(rates, |r| r.selection_rate)))
}

/// Equalized odds difference: the larger of the TPR and FPR ranges.
pub fn eo_difference(rates: &[GroupRates]) -> Result<f64> {
    require_groups(rates.len())?;
    let tpr = max_pairwise_gap(&column(rates, |r| r.tpr));
    let fpr = max_pairwise_gap(&column(rates, |r| r.fpr));
    Ok(tpr.max(fpr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionSet {
    pub delta_fmr: f64,
    pub mad_fmr: f64,
    pub delta_fnmr: f64,
    pub mad_fnmr: f64,
    /// Percentage points.
    pub delta_err: f64,
}

pub fn dispersion(rates: &[GroupRates]) -> Result<DispersionSet> {
    require_groups(rates.len())?;
    let fmr = column(rates, |r| r.fmr);
    let fnmr = column(rates, |r| r.fnmr);
    let err = column(rates, |r| 100.0 - 100.0 * r.accuracy);
    Ok(DispersionSet {
        delta_fmr: max_pairwise_gap(&fmr),
        mad_fmr: mean_absolute_difference(&fmr),
        delta_fnmr: max_pairwise_gap(&fnmr),
        mad_fnmr: mean_absolute_difference(&fnmr),
        delta_err: max_pairwise_gap(&err),
    })
}

/// A metric value, or the reason it cannot be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricValue {
    Defined(f64),
    Undefined { undefined: String },
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(*v),
            MetricValue::Undefined { .. } => None,
        }
    }
}

impl From<Result<f64>> for MetricValue {
    fn from(r: Result<f64>) -> Self {
        match r {
            Ok(v) => MetricValue::Defined(v),
            Err(e) => MetricValue::Undefined {
                undefined: e.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricName {
    #[serde(rename = "STD")]
    Std,
    #[serde(rename = "SER")]
    Ser,
    #[serde(rename = "EO")]
    Eo,
    #[serde(rename = "DP")]
    Dp,
    #[serde(rename = "FDR")]
    Fdr,
    #[serde(rename = "IR")]
    Ir,
    #[serde(rename = "GARBE")]
    Garbe,
    #[serde(rename = "delta_FMR")]
    DeltaFmr,
    #[serde(rename = "MAD_FMR")]
    MadFmr,
    #[serde(rename = "delta_FNMR")]
    DeltaFnmr,
    #[serde(rename = "MAD_FNMR")]
    MadFnmr,
    #[serde(rename = "delta_Err")]
    DeltaErr,
}

impl MetricName {
    /// Column order of the fairness table.
    pub const FAIRNESS: [MetricName; 7] = [
        MetricName::Std,
        MetricName::Ser,
        MetricName::Eo,
        MetricName::Dp,
        MetricName::Fdr,
        MetricName::Ir,
        MetricName::Garbe,
    ];

    /// Column order of the dispersion table.
    pub const DISPERSION: [MetricName; 5] = [
        MetricName::DeltaFmr,
        MetricName::MadFmr,
        MetricName::DeltaFnmr,
        MetricName::MadFnmr,
        MetricName::DeltaErr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MetricName::Std => "STD",
            MetricName::Ser => "SER",
            MetricName::Eo => "EO",
            MetricName::Dp => "DP",
            MetricName::Fdr => "FDR",
            MetricName::Ir => "IR",
            MetricName::Garbe => "GARBE",
            MetricName::DeltaFmr => "Δ_FMR",
            MetricName::MadFmr => "MAD_FMR",
            MetricName::DeltaFnmr => "Δ_FNMR",
            MetricName::MadFnmr => "MAD_FNMR",
            MetricName::DeltaErr => "Δ_Err",
        }
    }

    pub fn higher_is_fairer(self) -> bool {
        matches!(self, MetricName::Fdr)
    }

    /// Decimal places used when rendering the metric.
    pub fn precision(self) -> usize {
        match self {
            MetricName::Ir | MetricName::DeltaErr => 1,
            MetricName::MadFmr | MetricName::MadFnmr => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub threshold: f64,
    pub alpha: f64,
    pub groups: Vec<GroupRates>,
    pub std_accuracy: MetricValue,
    pub ser: MetricValue,
    pub fdr: MetricValue,
    pub ir: MetricValue,
    pub garbe: MetricValue,
    pub dp_difference: MetricValue,
    pub eo_difference: MetricValue,
    pub dispersion: Option<DispersionSet>,
}

impl FairnessReport {
    /// Computes every metric. Metrics whose preconditions fail are recorded
    /// as undefined; only an out-of-range `alpha` is an error.
    pub fn compute(threshold: f64, rates: &[GroupRates], alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(FairnessReport {
            threshold,
            alpha,
            groups: rates.to_vec(),
            std_accuracy: std_accuracy(rates).into(),
            ser: ser(rates).into(),
            fdr: fdr(rates, alpha).into(),
            ir: ir(rates, alpha).into(),
            garbe: garbe(rates, alpha).into(),
            dp_difference: dp_difference(rates).into(),
            eo_difference: eo_difference(rates).into(),
            dispersion: dispersion(rates).ok(),
        })
    }

    pub fn metric(&self, name: MetricName) -> Option<f64> {
        let d = self.dispersion.as_ref();
        match name {
            MetricName::Std => self.std_accuracy.value(),
            MetricName::Ser => self.ser.value(),
            MetricName::Eo => self.eo_difference.value(),
            MetricName::Dp => self.dp_difference.value(),
            MetricName::Fdr => self.fdr.value(),
            MetricName::Ir => self.ir.value(),
            MetricName::Garbe => self.garbe.value(),
            MetricName::DeltaFmr => d.map(|d| d.delta_fmr),
            MetricName::MadFmr => d.map(|d| d.mad_fmr),
            MetricName::DeltaFnmr => d.map(|d| d.delta_fnmr),
            MetricName::MadFnmr => d.map(|d| d.mad_fnmr),
            MetricName::DeltaErr => d.map(|d| d.delta_err),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Fairer,
    Unfairer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: MetricName,
    pub baseline: Option<f64>,
    pub occluded: Option<f64>,
    pub absolute_delta: Option<f64>,
    /// `None` when either side is undefined or the baseline is exactly 0.
    pub percent_change: Option<f64>,
    /// `None` when the metric did not move.
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub deltas: Vec<MetricDelta>,
}

impl BaselineComparison {
    pub fn get(&self, metric: MetricName) -> Option<&MetricDelta> {
        self.deltas.iter().find(|d| d.metric == metric)
    }
}

pub fn compare_to_baseline(
    baseline: &FairnessReport,
    occluded: &FairnessReport,
) -> Result<BaselineComparison> {
    if baseline.alpha != occluded.alpha {
        return Err(Error::InvalidInput(format!(
            "reports use different alpha ({} vs {})",
            baseline.alpha, occluded.alpha
        )));
    }
    fn groups(r: &FairnessReport) -> Vec<&str> {
        let mut g: Vec<&str> = r.groups.iter().map(|g| g.group.as_str()).collect();
        g.sort_unstable();
        g
    }
    if groups(baseline) != groups(occluded) {
        return Err(Error::InvalidInput(
            "reports cover different group sets".into(),
        ));
    }

    let deltas = MetricName::FAIRNESS
        .iter()
        .chain(MetricName::DISPERSION.iter())
        .map(|&metric| {
            let b = baseline.metric(metric);
            let o = occluded.metric(metric);
            let absolute_delta = b.zip(o).map(|(b, o)| o - b);
            let percent_change = b
                .zip(o)
                .filter(|(b, _)| *b != 0.0)
                .map(|(b, o)| 100.0 * (o - b) / b);
            let direction = absolute_delta.and_then(|d| {
                if d == 0.0 {
                    None
                } else if (d > 0.0) == metric.higher_is_fairer() {
                    Some(Direction::Fairer)
                } else {
                    Some(Direction::Unfairer)
                }
            });
            MetricDelta {
                metric,
                baseline: b,
                occluded: o,
                absolute_delta,
                percent_change,
                direction,
            }
        })
        .collect();
    Ok(BaselineComparison { deltas })
}

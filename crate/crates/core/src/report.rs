//! Machine-readable evaluation reports and their rendered tables.
//!
//! Tables are GitHub-flavoured markdown. Percent changes against the
//! unoccluded baseline are annotated as `value (+79%, unfairer)`; a
//! significant ANOVA p-value is set in bold.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fairness::{
    compare_to_baseline, BaselineComparison, Direction, FairnessReport, MetricName,
};
use crate::foir::{FoirTable, Outcome, StratumTest};
use crate::verification::{GroupRates, ThresholdMode, ThresholdResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Scenario label such as `RFW0-RFW1`.
    pub label: String,
    pub threshold_mode: ThresholdMode,
    pub threshold: ThresholdResult,
    pub fairness: FairnessReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineComparison>,
}

impl EvaluationReport {
    pub fn new(
        label: impl Into<String>,
        threshold_mode: ThresholdMode,
        threshold: ThresholdResult,
        alpha: f64,
    ) -> Result<Self> {
        let fairness = FairnessReport::compute(threshold.threshold, &threshold.per_group, alpha)?;
        Ok(EvaluationReport {
            label: label.into(),
            threshold_mode,
            threshold,
            fairness,
            baseline: None,
        })
    }

    pub fn with_baseline(mut self, baseline: &EvaluationReport) -> Result<Self> {
        self.baseline = Some(compare_to_baseline(&baseline.fairness, &self.fairness)?);
        Ok(self)
    }
}

/// One row of a fairness or dispersion table.
#[derive(Debug, Clone, Copy)]
pub struct TableRow<'a> {
    pub model: &'a str,
    pub scenario: &'a str,
    pub report: &'a FairnessReport,
    pub comparison: Option<&'a BaselineComparison>,
}

pub fn format_percent_change(percent: f64) -> String {
    let rounded = percent.round();
    if rounded > 0.0 {
        format!("+{rounded:.0}%")
    } else if rounded < 0.0 {
        format!("{rounded:.0}%")
    } else {
        "0%".to_string()
    }
}

fn metric_cell(row: &TableRow<'_>, metric: MetricName) -> String {
    let Some(value) = row.report.metric(metric) else {
        return "undefined".into();
    };
    let mut cell = format!("{value:.*}", metric.precision());
    if let Some(delta) = row.comparison.and_then(|c| c.get(metric)) {
        let direction = match delta.direction {
            Some(Direction::Fairer) => "fairer",
            Some(Direction::Unfairer) => "unfairer",
            None => return cell,
        };
        let pct = delta
            .percent_change
            .map_or_else(|| "n/a".to_string(), format_percent_change);
        let _ = write!(cell, " ({pct}, {direction})");
    }
    cell
}

fn render_metric_table(rows: &[TableRow<'_>], metrics: &[MetricName]) -> String {
    let mut out = String::from("| Model | Dataset |");
    for m in metrics {
        let _ = write!(out, " {} |", m.label());
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---|".repeat(metrics.len()));
    out.push('\n');
    for row in rows {
        let _ = write!(out, "| {} | {} |", row.model, row.scenario);
        for &m in metrics {
            let _ = write!(out, " {} |", metric_cell(row, m));
        }
        out.push('\n');
    }
    out
}

/// STD, SER, EO, DP, FDR, IR, GARBE per scenario.
pub fn render_fairness_table(rows: &[TableRow<'_>]) -> String {
    render_metric_table(rows, &MetricName::FAIRNESS)
}

/// Δ and MAD of FMR and FNMR, plus Δ of the error, per scenario.
pub fn render_dispersion_table(rows: &[TableRow<'_>]) -> String {
    render_metric_table(rows, &MetricName::DISPERSION)
}

/// Accuracy (%), FMR and FNMR per group.
pub fn render_rates_table(model: &str, scenarios: &[(&str, &[GroupRates])]) -> String {
    let Some((_, first)) = scenarios.first() else {
        return String::new();
    };
    let groups: Vec<&str> = first.iter().map(|g| g.group.as_str()).collect();
    let mut out = String::from("| Model | Dataset |");
    for block in ["Acc", "FMR", "FNMR"] {
        for g in &groups {
            let _ = write!(out, " {block} {g} |");
        }
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---|".repeat(3 * groups.len()));
    out.push('\n');
    for (scenario, rates) in scenarios {
        let _ = write!(out, "| {model} | {scenario} |");
        for r in rates.iter() {
            let _ = write!(out, " {:.1} |", 100.0 * r.accuracy);
        }
        for r in rates.iter() {
            let _ = write!(out, " {} |", format_rate(r.fmr));
        }
        for r in rates.iter() {
            let _ = write!(out, " {} |", format_rate(r.fnmr));
        }
        out.push('\n');
    }
    out
}

fn format_rate(v: f64) -> String {
    if v != 0.0 && v.abs() < 0.005 {
        format!("{v:.1E}")
    } else {
        format!("{v:.2}")
    }
}

pub fn format_p_value(p: f64) -> String {
    if p != 0.0 && p < 0.01 {
        format!("{p:.2E}")
    } else {
        format!("{p:.2}")
    }
}

/// Mean FOIR per group for FM and FNM, each followed by its p-value.
pub fn render_foir_table(rows: &[(&str, &str, &FoirTable)]) -> String {
    let Some((_, _, first)) = rows.first() else {
        return String::new();
    };
    let groups = &first.groups;
    let mut out = String::from("| Model | Dataset |");
    for outcome in [Outcome::FalseMatch, Outcome::FalseNonMatch] {
        for g in groups {
            let _ = write!(out, " {} {} |", outcome.short(), g);
        }
        let _ = write!(out, " {} p-value |", outcome.short());
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---|".repeat(2 * (groups.len() + 1)));
    out.push('\n');
    for (model, scenario, table) in rows {
        let _ = write!(out, "| {model} | {scenario} |");
        for outcome in [Outcome::FalseMatch, Outcome::FalseNonMatch] {
            let stratum = table.stratum(outcome);
            for g in groups {
                let cell = stratum
                    .and_then(|s| s.cells.iter().find(|c| &c.group == g))
                    .and_then(|c| c.mean_percent)
                    .map_or_else(|| "-".to_string(), |m| format!("{m:.1}"));
                let _ = write!(out, " {cell} |");
            }
            let p = match stratum.map(|s| &s.test) {
                Some(StratumTest::Anova(a)) if a.significant_at_05 => {
                    format!("**{}**", format_p_value(a.p_value))
                }
                Some(StratumTest::Anova(a)) => format_p_value(a.p_value),
                _ => "n/a".to_string(),
            };
            let _ = write!(out, " {p} |");
        }
        out.push('\n');
    }
    let excluded: usize = rows.iter().map(|(_, _, t)| t.excluded_total).sum();
    if excluded > 0 {
        let _ = writeln!(
            out,
            "\n{excluded} failure pair(s) had no important pixels and were excluded."
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::MetricValue;

    fn b34() -> Vec<GroupRates> {
        let acc = [92.5, 92.7, 95.2, 93.6];
        let fmr = [0.08, 0.03, 0.02, 0.06];
        let fnmr = [0.07, 0.12, 0.08, 0.06];
        ["Af", "As", "Ca", "In"]
            .iter()
            .enumerate()
            .map(|(i, g)| GroupRates::from_summary(*g, acc[i] / 100.0, fmr[i], fnmr[i]))
            .collect()
    }

    #[test]
    fn percent_formatting() {
        assert_eq!(format_percent_change(79.4), "+79%");
        assert_eq!(format_percent_change(-41.38), "-41%");
        assert_eq!(format_percent_change(0.2), "0%");
        assert_eq!(format_p_value(8.6e-14), "8.60E-14");
        assert_eq!(format_p_value(0.17), "0.17");
    }

    #[test]
    fn fairness_table_layout() {
        let base = FairnessReport::compute(0.3, &b34(), 0.5).unwrap();
        let mut occ = base.clone();
        occ.std_accuracy = MetricValue::Defined(1.92);
        occ.garbe = MetricValue::Defined(0.17);
        let mut base_fixed = base.clone();
        base_fixed.std_accuracy = MetricValue::Defined(1.07);
        base_fixed.garbe = MetricValue::Defined(0.29);
        let cmp = compare_to_baseline(&base_fixed, &occ).unwrap();
        let table = render_fairness_table(&[
            TableRow {
                model: "B34",
                scenario: "RFW0-RFW0",
                report: &base_fixed,
                comparison: None,
            },
            TableRow {
                model: "B34",
                scenario: "RFW0-RFW1",
                report: &occ,
                comparison: Some(&cmp),
            },
        ]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(
            lines[0],
            "| Model | Dataset | STD | SER | EO | DP | FDR | IR | GARBE |"
        );
        assert!(lines[2].starts_with("| B34 | RFW0-RFW0 | 1.07 | 1.56 |"));
        assert!(lines[3].contains("1.92 (+79%, unfairer)"));
        assert!(lines[3].contains("0.17 (-41%, fairer)"));
        // Unchanged metrics carry no annotation.
        assert!(lines[3].contains("| 1.56 |"));
    }

    #[test]
    fn dispersion_table_precision() {
        let rep = FairnessReport::compute(0.3, &b34(), 0.5).unwrap();
        let table = render_dispersion_table(&[TableRow {
            model: "B34",
            scenario: "RFW0-RFW0",
            report: &rep,
            comparison: None,
        }]);
        assert!(
            table.contains("| 0.06 | 0.026 | 0.06 | 0.024 | 2.7 |"),
            "{table}"
        );
    }

    #[test]
    fn rates_table_uses_scientific_for_tiny_rates() {
        let mut r = b34();
        r[2].fmr = 2.3e-3;
        let t = render_rates_table("G34", &[("RFW0-RFW0", &r)]);
        assert!(t.contains("2.3E-3"), "{t}");
        assert!(t.contains("| 92.5 |"));
    }
}

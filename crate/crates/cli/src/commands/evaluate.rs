use occfair::io::read_pairs_file;
use occfair::report::{
    render_dispersion_table, render_fairness_table, render_rates_table, EvaluationReport, TableRow,
};
use serde::Serialize;

use super::{load_evaluation_report, prepare_out, resolve_threshold};
use crate::config::RunConfig;
use crate::error::Result;
use crate::manifest::{write_json, write_manifest};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Serialize)]
struct EvaluateDetails {
    label: String,
    threshold: f64,
    pairs: usize,
    groups: Vec<String>,
}

pub fn run(config: &RunConfig) -> Result<()> {
    let pairs_path = config.pairs.as_deref().expect("validated by RunConfig");
    let pairs = read_pairs_file(pairs_path)?;
    let baseline = config
        .baseline_report
        .as_deref()
        .map(load_evaluation_report)
        .transpose()?;

    let threshold = resolve_threshold(config.threshold_mode, &pairs, baseline.as_ref())?;
    let label = config.label_for(pairs_path);
    let mut report = EvaluationReport::new(&label, config.threshold_mode, threshold, config.alpha)?;
    if let Some(b) = &baseline {
        report = report.with_baseline(b)?;
    }

    let mut rows = Vec::new();
    if let Some(b) = &baseline {
        rows.push(TableRow {
            model: &config.model,
            scenario: &b.label,
            report: &b.fairness,
            comparison: None,
        });
    }
    rows.push(TableRow {
        model: &config.model,
        scenario: &report.label,
        report: &report.fairness,
        comparison: report.baseline.as_ref(),
    });
    let mut rates: Vec<(&str, &[_])> = Vec::new();
    if let Some(b) = &baseline {
        rates.push((&b.label, &b.threshold.per_group));
    }
    rates.push((&report.label, &report.threshold.per_group));

    let fairness = render_fairness_table(&rows);
    let out = prepare_out(config)?;
    write_json(&out.join(REPORT_FILE), &report)?;
    occfair::io::write_atomic(&out.join("fairness.md"), fairness.as_bytes())?;
    occfair::io::write_atomic(
        &out.join("dispersion.md"),
        render_dispersion_table(&rows).as_bytes(),
    )?;
    occfair::io::write_atomic(
        &out.join("rates.md"),
        render_rates_table(&config.model, &rates).as_bytes(),
    )?;

    println!(
        "{label}: threshold {:.6}, overall accuracy {:.2}%",
        report.threshold.threshold,
        100.0 * report.threshold.overall_accuracy
    );
    print!("{fairness}");
    write_manifest(
        config,
        ["report.json", "fairness.md", "dispersion.md", "rates.md"]
            .map(String::from)
            .to_vec(),
        EvaluateDetails {
            label,
            threshold: report.threshold.threshold,
            pairs: pairs.len(),
            groups: report
                .fairness
                .groups
                .iter()
                .map(|g| g.group.clone())
                .collect(),
        },
    )
}

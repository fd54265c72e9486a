use std::collections::BTreeMap;

use occfair::foir::{aggregate_foir, classify_outcomes, FoirTable, Outcome, OutcomeRecord};
use occfair::io::{read_mask, read_pairs_file, read_pfm, read_saliency_manifest};
use occfair::report::render_foir_table;
use serde::{Deserialize, Serialize};

use super::{load_evaluation_report, prepare_out, resolve_threshold};
use crate::config::RunConfig;
use crate::error::{input, Result};
use crate::manifest::{write_json, write_manifest};

pub const FOIR_FILE: &str = "foir.json";

/// Shown when listing offending pair ids.
const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoirReport {
    pub label: String,
    pub threshold: f64,
    pub fraction: f64,
    pub table: FoirTable,
    /// Every false match and false non-match with its measurement.
    pub failures: Vec<OutcomeRecord>,
}

fn listing(ids: &[String]) -> String {
    let mut s = ids
        .iter()
        .take(MAX_LISTED)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > MAX_LISTED {
        s.push_str(&format!(" and {} more", ids.len() - MAX_LISTED));
    }
    s
}

pub fn run(config: &RunConfig) -> Result<()> {
    let pairs_path = config.pairs.as_deref().expect("validated by RunConfig");
    let pairs = read_pairs_file(pairs_path)?;
    let entries = read_saliency_manifest(config.saliency.as_deref().expect("validated"))?;
    let baseline = config
        .baseline_report
        .as_deref()
        .map(load_evaluation_report)
        .transpose()?;
    let threshold = resolve_threshold(config.threshold_mode, &pairs, baseline.as_ref())?.threshold;

    let by_id: BTreeMap<&str, _> = entries.iter().map(|e| (e.pair_id.as_str(), e)).collect();
    let mut failures: Vec<OutcomeRecord> = classify_outcomes(&pairs, threshold)?
        .into_iter()
        .filter(|r| matches!(r.outcome, Outcome::FalseMatch | Outcome::FalseNonMatch))
        .collect();

    let missing: Vec<String> = failures
        .iter()
        .filter(|r| !by_id.contains_key(r.pair_id.as_str()))
        .map(|r| r.pair_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(input(format!(
            "{} failure pair(s) at threshold {threshold} have no saliency entry: {}",
            missing.len(),
            listing(&missing)
        )));
    }

    let mut mismatched = Vec::new();
    for record in &mut failures {
        let entry = by_id[record.pair_id.as_str()];
        let map = read_pfm(&entry.saliency)?;
        let mask = read_mask(&entry.mask)?;
        match record.attach_foir(&map, &mask, config.fraction) {
            Ok(()) => {}
            Err(occfair::Error::Shape(_)) => mismatched.push(format!(
                "{} ({}x{} map, {}x{} mask)",
                record.pair_id,
                map.width(),
                map.height(),
                mask.width(),
                mask.height()
            )),
            Err(e) => return Err(e.into()),
        }
    }
    if !mismatched.is_empty() {
        return Err(input(format!(
            "saliency and mask sizes differ for {} pair(s): {}",
            mismatched.len(),
            listing(&mismatched)
        )));
    }

    let mut groups: Vec<String> = pairs.iter().map(|p| p.group.clone()).collect();
    groups.sort();
    groups.dedup();
    let table = aggregate_foir(&failures, &groups, config.significance);
    let label = config.label_for(pairs_path);
    let rendered = render_foir_table(&[(&config.model, &label, &table)]);

    let out = prepare_out(config)?;
    let report = FoirReport {
        label: label.clone(),
        threshold,
        fraction: config.fraction,
        table,
        failures,
    };
    write_json(&out.join(FOIR_FILE), &report)?;
    occfair::io::write_atomic(&out.join("foir.md"), rendered.as_bytes())?;
    println!(
        "{label}: {} failure pair(s) at threshold {threshold:.6}",
        report.failures.len()
    );
    print!("{rendered}");
    write_manifest(
        config,
        vec![FOIR_FILE.into(), "foir.md".into()],
        serde_json::json!({ "label": label, "threshold": threshold }),
    )
}

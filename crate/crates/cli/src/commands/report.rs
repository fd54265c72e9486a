use std::fmt::Write as _;

use occfair::report::{
    render_dispersion_table, render_fairness_table, render_foir_table, render_rates_table,
    EvaluationReport, TableRow,
};
use occfair::verification::GroupRates;

use super::{load_evaluation_report, prepare_out, FoirReport};
use crate::config::RunConfig;
use crate::error::{input, Result};
use crate::manifest::write_manifest;

const PALETTE: [&str; 6] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
];

/// Grouped bar chart of per-group accuracy, one cluster per scenario.
fn accuracy_chart(scenarios: &[(&str, &[GroupRates])]) -> String {
    let groups: Vec<&str> = scenarios
        .first()
        .map(|(_, r)| r.iter().map(|g| g.group.as_str()).collect())
        .unwrap_or_default();
    let bar = 18.0;
    let gap = 24.0;
    let (left, top, plot_h) = (48.0, 20.0, 220.0);
    let cluster = bar * groups.len() as f64 + gap;
    let width = left + cluster * scenarios.len() as f64 + 140.0;
    let height = top + plot_h + 40.0;

    let lo = scenarios
        .iter()
        .flat_map(|(_, r)| r.iter().map(|g| g.accuracy))
        .fold(1.0f64, f64::min);
    let floor = ((lo * 10.0).floor() / 10.0).clamp(0.0, 0.9);
    let y = |acc: f64| top + plot_h * (1.0 - (acc - floor) / (1.0 - floor));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        top + plot_h
    );
    for k in 0..=4 {
        let acc = floor + (1.0 - floor) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.0}%</text>"#,
            left - 4.0,
            y(acc) + 4.0,
            100.0 * acc
        );
    }
    for (s, (name, rates)) in scenarios.iter().enumerate() {
        let x0 = left + gap / 2.0 + cluster * s as f64;
        for (g, r) in rates.iter().enumerate() {
            let x = x0 + bar * g as f64;
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.1}" y="{:.1}" width="{}" height="{:.1}" fill="{}"><title>{} {}: {:.2}%</title></rect>"#,
                y(r.accuracy),
                bar - 2.0,
                top + plot_h - y(r.accuracy),
                PALETTE[g % PALETTE.len()],
                name,
                r.group,
                100.0 * r.accuracy
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{name}</text>"#,
            x0 + bar * rates.len() as f64 / 2.0,
            top + plot_h + 16.0
        );
    }
    let legend_x = left + cluster * scenarios.len() as f64 + 20.0;
    for (g, name) in groups.iter().enumerate() {
        let ly = top + 16.0 * g as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{legend_x}" y="{ly}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{name}</text>"#,
            PALETTE[g % PALETTE.len()],
            legend_x + 14.0,
            ly + 9.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn run(config: &RunConfig) -> Result<()> {
    let reports: Vec<EvaluationReport> = config
        .reports
        .iter()
        .map(|p| load_evaluation_report(p))
        .collect::<Result<_>>()?;
    let foir_reports: Vec<FoirReport> = config
        .foir_reports
        .iter()
        .map(|p| {
            let text =
                std::fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| input(format!("{} is not a FOIR report: {e}", p.display())))
        })
        .collect::<Result<_>>()?;

    let out = prepare_out(config)?;
    let mut outputs = Vec::new();
    let mut write = |name: &str, text: &str| -> Result<()> {
        occfair::io::write_atomic(&out.join(name), text.as_bytes())?;
        outputs.push(name.to_string());
        Ok(())
    };

    if !reports.is_empty() {
        let rows: Vec<TableRow<'_>> = reports
            .iter()
            .map(|r| TableRow {
                model: &config.model,
                scenario: &r.label,
                report: &r.fairness,
                comparison: r.baseline.as_ref(),
            })
            .collect();
        let rates: Vec<(&str, &[GroupRates])> = reports
            .iter()
            .map(|r| (r.label.as_str(), r.threshold.per_group.as_slice()))
            .collect();
        let fairness = render_fairness_table(&rows);
        print!("{fairness}");
        write("fairness.md", &fairness)?;
        write("dispersion.md", &render_dispersion_table(&rows))?;
        write("rates.md", &render_rates_table(&config.model, &rates))?;
        write("accuracy.svg", &accuracy_chart(&rates))?;
    }
    if !foir_reports.is_empty() {
        let rows: Vec<_> = foir_reports
            .iter()
            .map(|r| (config.model.as_str(), r.label.as_str(), &r.table))
            .collect();
        let table = render_foir_table(&rows);
        print!("{table}");
        write("foir.md", &table)?;
    }
    write_manifest(
        config,
        outputs,
        serde_json::json!({
            "scenarios": reports.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(),
            "foir_scenarios": foir_reports.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(),
        }),
    )
}

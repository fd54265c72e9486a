use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Written last by every run. `created_at` is the only field that changes
/// between reruns with identical inputs.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub created_at: String,
    pub config: &'a RunConfig,
    pub outputs: Vec<String>,
    pub details: T,
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(occfair::Error::from)?;
    bytes.push(b'\n');
    occfair::io::write_atomic(path, &bytes)?;
    Ok(())
}

pub fn write_manifest<T: Serialize>(
    config: &RunConfig,
    outputs: Vec<String>,
    details: T,
) -> Result<()> {
    let manifest = RunManifest {
        tool: "occfair",
        version: env!("CARGO_PKG_VERSION"),
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config,
        outputs,
        details,
    };
    write_json(&config.out.join(MANIFEST_FILE), &manifest)
}

//! Executing a config into an output directory with a manifest.
//!
//! The manifest lists every file with its SHA-256 and carries no
//! timestamps, so identical configs give byte-identical output trees.

use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::LoadedConfig;
use crate::error::Result;
use crate::experiments::{execute, Artifacts};
use crate::io::{format_shots, write_json, write_text};

pub const MANIFEST: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Rendered files of a run, in a stable order, keyed by relative path.
pub fn render(cfg: &LoadedConfig, art: &Artifacts) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    files.push(("config.toml".into(), cfg.source.clone().into_bytes()));
    for (name, t) in &art.tables {
        files.push((name.clone(), t.to_csv()?.into_bytes()));
    }
    for (name, v) in &art.reports {
        let mut text = serde_json::to_string_pretty(v).expect("json values serialize");
        text.push('\n');
        files.push((name.clone(), text.into_bytes()));
    }
    for (name, s) in &art.shots {
        files.push((name.clone(), format_shots(s).into_bytes()));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(files)
}

/// Outcome of [`run_config`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub artifacts: Artifacts,
}

/// Run `cfg` and write everything below `out` (the config's `output_dir`
/// when `None`).
pub fn run_config(cfg: &LoadedConfig, out: Option<&Path>) -> Result<RunOutput> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.config.output_dir.clone());
    let artifacts = execute(cfg)?;
    let files = render(cfg, &artifacts)?;
    let mut listing = Vec::new();
    for (name, bytes) in &files {
        write_text(&dir.join(name), std::str::from_utf8(bytes).expect("rendered files are utf-8"))?;
        listing.push(json!({ "path": name, "sha256": sha256_hex(bytes) }));
    }
    let c = &cfg.config;
    let manifest = json!({
        "tool": "rydqca",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": c.experiment.to_string(),
        "engine": c.engine.to_string(),
        "seed": c.seed,
        "config_sha256": sha256_hex(cfg.source.as_bytes()),
        "files": listing,
    });
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(RunOutput { dir, artifacts })
}

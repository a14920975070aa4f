//! Batch front end: reads a TOML config, runs one experiment, writes CSV
//! tables and a JSON manifest into the output directory.

pub mod commands;
pub mod config;
pub mod plot;
pub mod report;

use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::Value;
use wegner_core::experiments::Runner;
use wegner_core::{LabError, Result};

pub use commands::SUBCOMMANDS;
pub use config::RunConfig;
pub use plot::{emit_plot_data, PlotSource};
pub use report::Table;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything `run` needs besides the subcommand name.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// 0 uses the available parallelism.
    pub workers: usize,
    pub overrides: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub samples: usize,
    pub workers: usize,
    /// Effective configuration as TOML, including `run.seed` and `run.samples`.
    pub config: String,
    /// Git blob hash convention over SHA-256: `sha256("blob <len>\0" + config)`.
    pub input_hash: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputFile>,
    pub excluded: std::collections::BTreeMap<String, usize>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn blob_hash(content: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content.as_bytes());
    hex(&h.finalize())
}

/// Resolves seed and sample count (flag, then `run.*`, then default) and
/// writes them back so the snapshot replays the run.
fn effective(config: &mut RunConfig, subcommand: &str, opts: &RunOptions) -> Result<(u64, usize)> {
    let run = config.section("run");
    let seed = match opts.seed {
        Some(s) => s,
        None => run.u64_or("seed", 0)?,
    };
    let samples = match opts.samples {
        Some(n) => n,
        None => run.usize_or("samples", commands::default_samples(subcommand))?,
    };
    let as_int = |v: u64| {
        i64::try_from(v).map_err(|_| LabError::Config(format!("{v} does not fit in a TOML integer")))
    };
    config.set("run.seed", Value::Integer(as_int(seed)?));
    config.set("run.samples", Value::Integer(as_int(samples as u64)?));
    Ok((seed, samples))
}

pub fn run(subcommand: &str, opts: &RunOptions) -> Result<RunManifest> {
    let started = Utc::now();
    if !SUBCOMMANDS.contains(&subcommand) {
        return Err(LabError::Config(format!(
            "unknown subcommand `{subcommand}`; expected one of {}",
            SUBCOMMANDS.join(", ")
        )));
    }
    let mut config = RunConfig::load(&opts.config)?;
    for o in &opts.overrides {
        config.apply_override(o)?;
    }
    let (seed, samples) = effective(&mut config, subcommand, opts)?;
    let runner = Runner::new(opts.workers)?;
    let ctx = commands::Context {
        config: &config,
        seed,
        samples,
        runner: &runner,
    };
    log::info!("{subcommand}: seed {seed}, {samples} samples, {} workers", runner.workers());
    let outputs = commands::dispatch(subcommand, &ctx)?;

    std::fs::create_dir_all(&opts.out)?;
    let mut files = Vec::new();
    for (name, table) in &outputs.tables {
        let text = table.to_csv();
        report::write_atomic(&opts.out.join(name), text.as_bytes())?;
        files.push(OutputFile {
            file: name.clone(),
            rows: table.len(),
            sha256: sha256_hex(text.as_bytes()),
        });
    }
    let snapshot = config.to_toml();
    let manifest = RunManifest {
        tool: "wegner".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        seed,
        samples,
        workers: runner.workers(),
        input_hash: blob_hash(&snapshot),
        config: snapshot,
        started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
        finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        outputs: files,
        excluded: outputs.excluded,
    };
    write_manifest(&opts.out, &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| LabError::Contract(format!("manifest does not serialize: {e}")))?;
    report::write_atomic(&dir.join(MANIFEST_FILE), format!("{json}\n").as_bytes())
}

//! Run manifests: one JSON document per invocation recording the resolved
//! configuration, seed, and I/O paths, sufficient to reproduce the run.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use socnav::a2c::TrainConfig;
use socnav::env::EnvConfig;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Value of SOCNAV_OUT_ROOT at invocation time, when set.
    pub out_root_env: Option<String>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_id: Option<String>,
    pub env_config: EnvConfig<f64>,
    pub env_fingerprint: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_config: Option<TrainConfig>,
    /// Subcommand-specific arguments (suite name, count, sigmas, ...).
    pub args: serde_json::Value,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub struct ManifestBuilder {
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, seed: u64, out_dir: &Path, env_config: EnvConfig<f64>) -> Self {
        let fingerprint = env_config.fingerprint();
        ManifestBuilder {
            manifest: RunManifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                subcommand: subcommand.to_string(),
                seed,
                out_dir: out_dir.to_path_buf(),
                out_root_env: std::env::var("SOCNAV_OUT_ROOT").ok(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                scenario_id: None,
                env_config,
                env_fingerprint: fingerprint,
                train_config: None,
                args: serde_json::Value::Null,
                started_unix_s: now_unix(),
                finished_unix_s: 0,
            },
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.manifest.inputs.push(path.to_path_buf());
        self
    }

    pub fn scenario_id(mut self, id: &str) -> Self {
        self.manifest.scenario_id = Some(id.to_string());
        self
    }

    pub fn train_config(mut self, cfg: &TrainConfig) -> Self {
        self.manifest.train_config = Some(cfg.clone());
        self
    }

    pub fn args(mut self, value: serde_json::Value) -> Self {
        self.manifest.args = value;
        self
    }

    pub fn output(&mut self, path: &Path) {
        self.manifest.outputs.push(path.to_path_buf());
    }

    /// Finalizes timestamps and writes `manifest.json` into the run's
    /// output directory.
    pub fn write(mut self) -> std::io::Result<PathBuf> {
        self.manifest.finished_unix_s = now_unix();
        let path = self.manifest.out_dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serialization");
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

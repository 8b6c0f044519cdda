//! Run manifests: enough to re-run a command and get the same bytes out.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::output::{Artifacts, CliResult};

/// Prefix of the environment variables that override flags.
pub const ENV_PREFIX: &str = "CORMF_";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, exactly as given.
    pub argv: Vec<String>,
    /// `CORMF_*` variables in effect for the run.
    pub env: Vec<(String, String)>,
    /// Working directory the relative paths in `argv` refer to.
    pub cwd: PathBuf,
    pub parameters: serde_json::Value,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<PathBuf>,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub version: String,
}

pub struct ManifestBuilder {
    command: String,
    argv: Vec<String>,
    started: Instant,
    started_unix: u64,
}

impl ManifestBuilder {
    pub fn start(command: &str, argv: Vec<String>) -> Self {
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self { command: command.to_string(), argv, started: Instant::now(), started_unix }
    }

    /// Write `<command>-manifest.json` next to the other artifacts.
    pub fn finish<P: Serialize>(
        self,
        artifacts: &mut Artifacts,
        parameters: &P,
        seeds: Vec<u64>,
    ) -> CliResult<PathBuf> {
        let mut env: Vec<(String, String)> = std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        env.sort();
        let manifest = RunManifest {
            command: self.command.clone(),
            argv: self.argv,
            env,
            cwd: std::env::current_dir()?,
            parameters: serde_json::to_value(parameters)?,
            seeds,
            artifacts: artifacts.written.clone(),
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        artifacts.json(&format!("{}-manifest.json", self.command), &manifest)
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

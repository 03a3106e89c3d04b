//! Output files and the run manifest written beside them.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub stargraph: &'static str,
    pub cli: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: RunConfig,
    pub seed: u64,
    pub versions: Versions,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `table.csv` → `table.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Collects the files of one invocation and writes the manifest at the end.
pub struct Session {
    command: Vec<String>,
    config: RunConfig,
    started: Instant,
    outputs: Vec<OutputDigest>,
}

impl Session {
    pub fn new(command: Vec<String>, config: RunConfig) -> Self {
        Self { command, config, started: Instant::now(), outputs: Vec::new() }
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Writes `bytes` to `path`, or to stdout when `path` is `None`.
    pub fn emit(&mut self, path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
        match path {
            Some(p) => {
                std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                self.outputs.push(OutputDigest { path: p.display().to_string(), sha256: sha256_hex(bytes) });
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
            }
        }
        Ok(())
    }

    /// Writes the manifest next to the first output file, if any was written.
    pub fn finish(self) -> Result<(), CliError> {
        let Some(first) = self.outputs.first() else { return Ok(()) };
        let path = manifest_path(Path::new(&first.path));
        let manifest = RunManifest {
            command: self.command,
            seed: self.config.optimizer.seed,
            config: self.config,
            versions: Versions { stargraph: stargraph::VERSION, cli: env!("CARGO_PKG_VERSION") },
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_input() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_sits_beside_output() {
        assert_eq!(manifest_path(Path::new("out/t.csv")), PathBuf::from("out/t.csv.manifest.json"));
    }
}

//! Run manifest: what produced a set of output files.
//!
//! The hash covers everything that determines the outputs (tool version,
//! subcommand, canonical config, subcommand parameters) and nothing that
//! varies between reruns, so CSVs that quote it stay byte-identical.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    /// Canonical TOML of the config after overrides, defaults filled in.
    pub config: String,
    pub overrides: Vec<String>,
    /// Numeric settings actually used.
    pub numerics: Value,
    pub parameters: Value,
    pub hash: String,
    pub status: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock: WallClock,
}

#[derive(Debug, Serialize)]
pub struct WallClock {
    pub started_unix_s: u64,
    pub elapsed_s: f64,
}

pub struct Run {
    manifest: RunManifest,
    dir: PathBuf,
    start: Instant,
    verbose: bool,
}

impl Run {
    pub fn new(
        subcommand: &'static str,
        config: String,
        overrides: Vec<String>,
        numerics: Value,
        parameters: Value,
        dir: &Path,
        verbose: bool,
    ) -> Result<Self, Failure> {
        let version = env!("CARGO_PKG_VERSION");
        let key = serde_json::json!({
            "tool": "eosvac",
            "version": version,
            "subcommand": subcommand,
            "config": config,
            "parameters": parameters,
        });
        let hash = format!("{:x}", Sha256::digest(key.to_string().as_bytes()));
        std::fs::create_dir_all(dir).map_err(|e| Failure::Validation(format!("{}: {e}", dir.display())))?;
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Ok(Run {
            manifest: RunManifest {
                tool: "eosvac",
                version,
                subcommand,
                config,
                overrides,
                numerics,
                parameters,
                hash,
                status: "ok".into(),
                outputs: Vec::new(),
                wall_clock: WallClock { started_unix_s: started, elapsed_s: 0.0 },
            },
            dir: dir.to_path_buf(),
            start: Instant::now(),
            verbose,
        })
    }

    fn manifest_name(&self) -> String {
        format!("{}_manifest.json", self.manifest.subcommand)
    }

    /// Reference line body for the `#` comment of every table.
    pub fn reference(&self) -> String {
        format!("{} sha256={}", self.manifest_name(), self.manifest.hash)
    }

    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[{:7.2} s] {}", self.start.elapsed().as_secs_f64(), msg.as_ref());
        }
    }

    pub fn write(&mut self, name: &str, body: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        self.log(format!("wrote {}", path.display()));
        self.manifest.outputs.push(path);
        Ok(())
    }

    pub fn mark(&mut self, status: impl Into<String>) {
        self.manifest.status = status.into();
    }

    /// Writes the manifest last so it lists every output.
    pub fn finish(mut self) -> Result<(), Failure> {
        self.manifest.wall_clock.elapsed_s = self.start.elapsed().as_secs_f64();
        let path = self.dir.join(self.manifest_name());
        let body = serde_json::to_string_pretty(&self.manifest).expect("manifest serialises") + "\n";
        std::fs::write(&path, body).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        self.log(format!("wrote {}", path.display()));
        Ok(())
    }
}

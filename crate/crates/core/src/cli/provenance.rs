//! Config hashing, output headers and timestamp sidecars.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Result;

pub const TOOL: &str = "nestlat";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies the effective parameters of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub command: String,
    pub config_sha256: String,
}

impl Provenance {
    /// Hashes `params` as compact JSON; `serde_json` maps keep keys sorted.
    /// Input files should be folded in with [`file_digest`] so that the hash
    /// follows their content rather than their location.
    pub fn new(command: &str, params: &impl Serialize) -> Result<Self> {
        let value = serde_json::to_value(params).map_err(json_error)?;
        let canonical = serde_json::to_string(&serde_json::json!({ "command": command, "params": value }))
            .map_err(json_error)?;
        Ok(Self {
            command: command.into(),
            config_sha256: hex::encode(Sha256::digest(canonical.as_bytes())),
        })
    }

    pub fn header(&self) -> String {
        format!("{TOOL} {VERSION} config-sha256={}", self.config_sha256)
    }

    /// Short form for the 80-byte STL header.
    pub fn stl_label(&self) -> String {
        format!("{TOOL} {VERSION} {} config-sha256={}", self.command, &self.config_sha256[..32])
    }

    /// Writes `<out>.meta.json` with wall-clock data kept out of the output itself.
    pub fn write_sidecar(&self, out: &Path, started: SystemTime) -> Result<PathBuf> {
        let finished = SystemTime::now();
        let secs = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let meta = serde_json::json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "config_sha256": self.config_sha256,
            "output": out.file_name().map(|f| f.to_string_lossy().into_owned()),
            "started_unix_s": secs(started),
            "finished_unix_s": secs(finished),
            "elapsed_s": finished.duration_since(started).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        });
        let path = sidecar_path(out);
        std::fs::write(&path, serde_json::to_string_pretty(&meta).map_err(json_error)? + "\n")?;
        Ok(path)
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

/// SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

fn json_error(e: serde_json::Error) -> crate::Error {
    crate::Error::InvalidArgument(format!("cannot serialise configuration: {e}"))
}

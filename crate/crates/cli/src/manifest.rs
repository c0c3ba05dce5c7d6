//! Run manifests: a key=value snapshot of everything needed to reproduce
//! a run, written atomically before any heavy work starts.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;
use sttcl::io::atomic_write;
use sttcl::Result;

pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Manifest { entries: Vec::new() };
        m.set("artifact_version", env!("CARGO_PKG_VERSION"));
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Record an input path together with its SHA-256.
    pub fn input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.set(&format!("input.{name}"), path.display());
        let bytes = std::fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        self.set(&format!("input.{name}.sha256"), hex);
        Ok(())
    }

    pub fn output(&mut self, name: &str, path: &Path) {
        self.set(&format!("output.{name}"), path.display());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(text, "{k}={v}");
        }
        atomic_write(path, text.as_bytes())
    }
}

/// Read a manifest back as key=value pairs (used by plot-data).
pub fn read_manifest(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use fallsense::error::{Error, Result};

/// Report directory plus the bookkeeping for its manifest.
pub struct Output {
    dir: PathBuf,
    files: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
    notes: BTreeMap<String, Value>,
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
            inputs: BTreeMap::new(),
            notes: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        self.record(name, content.as_bytes());
        Ok(())
    }

    /// Registers a file written by other code.
    pub fn adopt(&mut self, name: &str) -> Result<()> {
        let path = self.path(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.record(name, &bytes);
        Ok(())
    }

    fn record(&mut self, name: &str, bytes: &[u8]) {
        self.files.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
    }

    pub fn input(&mut self, name: impl Into<String>, digest: impl Into<String>) {
        self.inputs.insert(name.into(), digest.into());
    }

    pub fn input_file(&mut self, path: &Path) -> Result<()> {
        let d = file_digest(path)?;
        self.input(path.display().to_string(), d);
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: Value) {
        self.notes.insert(key.to_string(), value);
    }

    /// Writes `manifest.json`; `created_unix_ms` is its only
    /// run-dependent field.
    pub fn finish(self, command: &str, argv: &[String], seed: u64) -> Result<()> {
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        let manifest = json!({
            "command": command,
            "argv": argv.get(1..).unwrap_or_default(),
            "seed": seed,
            "version": env!("CARGO_PKG_VERSION"),
            "inputs": self.inputs,
            "outputs": self.files,
            "notes": self.notes,
            "created_unix_ms": created,
        });
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

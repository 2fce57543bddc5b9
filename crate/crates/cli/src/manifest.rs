//! Run manifests: a flat text record written next to each command's outputs
//! with everything needed to reproduce the run bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use cdsfcrf::Result;

pub struct RunManifest {
    command: String,
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((format!("param.{key}"), value.to_string()));
        self
    }

    pub fn input(&mut self, key: &str, path: &Path) -> &mut Self {
        self.entries.push((format!("input.{key}"), path.display().to_string()));
        self
    }

    pub fn output(&mut self, key: &str, path: &Path) -> &mut Self {
        self.entries.push((format!("output.{key}"), path.display().to_string()));
        self
    }

    pub fn note(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    /// Atomic write: temp file in the target directory, then rename.
    pub fn write(&self, path: &Path, duration_ms: u128) -> Result<()> {
        let mut text = String::new();
        text.push_str(&format!("command = {}\n", self.command));
        text.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        for (k, v) in &self.entries {
            text.push_str(&format!("{k} = {v}\n"));
        }
        text.push_str(&format!("duration_ms = {duration_ms}\n"));

        let tmp: PathBuf = {
            let mut os = path.as_os_str().to_owned();
            os.push(".tmp");
            PathBuf::from(os)
        };
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Everything needed to repeat a run. Written as pretty JSON next to the
/// run's primary output; contains no timestamps so identical runs produce
/// identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub flags: serde_json::Value,
    /// Input path to SHA-256 hex digest of its contents.
    pub inputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new<F: Serialize>(command: &str, flags: &F, seed: Option<u64>) -> Result<Self, CliError> {
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            flags: serde_json::to_value(flags).map_err(|e| CliError::Output(e.to_string()))?,
            inputs: BTreeMap::new(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(nlembed::Error::from)?;
        self.inputs
            .insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    /// Writes `<output>.manifest.json`.
    pub fn write_beside(&self, output: &Path) -> Result<PathBuf, CliError> {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(nlembed::Error::from)?;
        Ok(path)
    }
}

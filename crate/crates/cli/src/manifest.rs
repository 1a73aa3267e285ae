use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use panoheat::heatsim::Toggles;
use panoheat::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary sibling and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// SHA-256 of the resolved configuration, serialized as JSON.
    pub config_sha256: Option<String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub dt: Option<f64>,
    pub dt_bound: Option<f64>,
    pub steps: Option<usize>,
    pub toggles: Option<Toggles>,
    /// Material per surface id.
    pub materials: BTreeMap<String, String>,
    pub wall_clock_s: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            dt: None,
            dt_bound: None,
            steps: None,
            toggles: None,
            materials: BTreeMap::new(),
            wall_clock_s: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn config<T: Serialize>(&mut self, cfg: &T) {
        let json = serde_json::to_vec(cfg).expect("config serializes");
        self.config_sha256 = Some(sha256_hex(&json));
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn finish(mut self, path: &Path) -> Result<()> {
        if let Some(t) = self.started.take() {
            self.wall_clock_s = t.elapsed().as_secs_f64();
        }
        let json = serde_json::to_vec_pretty(&self).expect("manifest serializes");
        write_atomic(path, &json)
    }
}

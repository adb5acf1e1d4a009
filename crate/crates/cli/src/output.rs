//! Atomic file output and the run manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Provenance record written next to every run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_time: f64,
    pub toolkit_version: String,
    pub content_hash: String,
    pub arguments: Vec<String>,
}

/// SHA-256 over the contents of the input files, each framed by its length.
pub fn content_hash(inputs: &[Vec<u8>]) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

/// Output directory that records every file it writes.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
    started: Instant,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new(), started: Instant::now() })
    }

    /// Writes `name` through a temporary sibling renamed into place once
    /// complete, so readers never observe a partial file.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.{}.tmp", std::process::id()));
        let result = (|| {
            let file = File::create(&tmp).map_err(|e| CliError::io(format!("creating {}", tmp.display()), e))?;
            let mut w = BufWriter::new(file);
            fill(&mut w)?;
            let file = w.into_inner().map_err(|e| CliError::io(format!("writing {}", tmp.display()), e.into_error()))?;
            file.sync_all().map_err(|e| CliError::io(format!("syncing {}", tmp.display()), e))?;
            fs::rename(&tmp, &target).map_err(|e| CliError::io(format!("renaming into {}", target.display()), e))
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result?;
        log::info!("wrote {}", target.display());
        self.written.push(target.clone());
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(vortex_core::Error::from)?;
            w.write_all(b"\n").map_err(|e| CliError::io(name.to_string(), e))
        })
    }

    /// Writes `manifest.json` listing everything written so far.
    pub fn finish(mut self, command: &str, config_path: Option<&Path>, inputs: &[(PathBuf, Vec<u8>)]) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_path: config_path.map(Path::to_path_buf),
            inputs: inputs.iter().map(|(p, _)| p.clone()).collect(),
            outputs: self.written.clone(),
            wall_time: self.started.elapsed().as_secs_f64(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            content_hash: content_hash(&inputs.iter().map(|(_, b)| b.clone()).collect::<Vec<_>>()),
            arguments: std::env::args().skip(1).collect(),
        };
        self.write_json("manifest.json", &manifest)
    }
}

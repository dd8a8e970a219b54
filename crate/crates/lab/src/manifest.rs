//! Output directory bookkeeping and the `manifest.json` written by every run.

use std::io::Write;
use std::path::{Path, PathBuf};

use crit3_core::RadialGrid;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct GridDescriptor {
    pub n: usize,
    pub r_max: f64,
    pub mapping: String,
    pub stretch: f64,
    /// SHA-256 of the node radii as little-endian `f64` bytes.
    pub r_sha256: String,
}

impl GridDescriptor {
    pub fn of(grid: &RadialGrid) -> Self {
        let mut h = Sha256::new();
        for r in grid.r() {
            h.update(r.to_le_bytes());
        }
        let mapping = grid.mapping();
        Self {
            n: grid.n(),
            r_max: grid.r_max(),
            mapping: if mapping.code() == 0 { "uniform".into() } else { "algebraic-stretch".into() },
            stretch: mapping.scale(),
            r_sha256: hex::encode(h.finalize()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    status: &'a str,
    message: Option<String>,
    config: &'a ExperimentConfig,
    grids: &'a [GridDescriptor],
    artifacts: Vec<Artifact>,
}

/// One command invocation: the output directory plus the files written so far.
pub struct Run {
    pub cfg: ExperimentConfig,
    command: String,
    out: PathBuf,
    files: Vec<String>,
    grids: Vec<GridDescriptor>,
}

impl Run {
    pub fn new(command: &str, cfg: ExperimentConfig) -> Result<Self, CliError> {
        let out = cfg.out.clone();
        std::fs::create_dir_all(&out)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", out.display())))?;
        Ok(Self { cfg, command: command.into(), out, files: Vec::new(), grids: Vec::new() })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn record_grid(&mut self, grid: &RadialGrid) {
        self.grids.push(GridDescriptor::of(grid));
    }

    /// Writes `name` inside the output directory and records it as an artifact.
    pub fn write<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> crit3_core::Result<()>,
    {
        let path = self.out.join(name);
        let mut w = crit3_core::io::create(&path)?;
        body(&mut w)?;
        w.flush()?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.into());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, |w| crit3_core::io::write_json(w, value))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write(name, |w| Ok(w.write_all(text.as_bytes())?))
    }

    /// Writes the manifest; `outcome` is the command's result.
    pub fn finish(self, outcome: &Result<(), CliError>) -> Result<(), CliError> {
        let mut names = self.files.clone();
        names.sort();
        let mut artifacts = Vec::with_capacity(names.len());
        for name in names {
            let bytes = std::fs::read(self.out.join(&name))?;
            artifacts.push(Artifact { bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(&bytes)), path: name });
        }
        let (status, message) = match outcome {
            Ok(()) => ("ok", None),
            Err(e @ CliError::Falsified(_)) => ("falsified", Some(e.to_string())),
            Err(e) => ("failed", Some(e.to_string())),
        };
        let manifest = Manifest {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            status,
            message,
            config: &self.cfg,
            grids: &self.grids,
            artifacts,
        };
        let path = self.out.join(MANIFEST);
        crit3_core::io::write_json(crit3_core::io::create(&path)?, &manifest)?;
        Ok(())
    }
}

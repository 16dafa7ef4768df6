//! Experiment runners behind the `modal-homodyne` command.

pub mod config;
pub mod runners;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("numerical contract violated: {0}")]
    Numerical(#[from] modal_homodyne::Error),
    #[error("statistical validation failed: {0}")]
    Statistical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Statistical(_) => 4,
        }
    }
}

/// Command-line overrides shared by all runners.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub grid_points: Option<usize>,
}

/// Output directory for CSV and JSON files.
#[derive(Debug, Clone)]
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self, CliError> {
        let path = path.into();
        std::fs::create_dir_all(&path)?;
        Ok(Self(path))
    }

    pub fn path(&self) -> &Path {
        &self.0
    }

    pub fn writer(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        Ok(BufWriter::new(File::create(self.0.join(name))?))
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut w = self.writer(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

/// dB value rounded to 0.01 for human-readable summaries.
pub fn db2(x: f64) -> String {
    format!("{x:.2} dB")
}

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use melodyforge_core::checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, ModelCheckpoint};
use melodyforge_core::trainer::EpochMetrics;

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", .path.display())]
    Checkpoint { path: PathBuf, source: CheckpointError },
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> FileError + '_ {
    move |source| FileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_checkpoint(path: &Path) -> Result<ModelCheckpoint, FileError> {
    let bytes = fs::read(path).map_err(io_error(path))?;
    load_checkpoint(&bytes).map_err(|source| FileError::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_checkpoint(path: &Path, checkpoint: &ModelCheckpoint) -> Result<(), FileError> {
    fs::write(path, save_checkpoint(checkpoint)).map_err(io_error(path))
}

pub const METRICS_HEADER: &str = "epoch,loss,accuracy,seconds";

pub fn metrics_csv_row(m: &EpochMetrics) -> String {
    format!("{},{},{},{:.3}", m.epoch, m.loss, m.accuracy, m.seconds)
}

pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        out.push_str(&metrics_csv_row(m));
        out.push('\n');
    }
    out
}

/// Metrics CSV written one row per epoch, flushed as it goes so other
/// processes can follow training.
pub struct MetricsLog {
    path: PathBuf,
    file: File,
}

impl MetricsLog {
    pub fn create(path: &Path) -> Result<Self, FileError> {
        let mut file = File::create(path).map_err(io_error(path))?;
        writeln!(file, "{METRICS_HEADER}").map_err(io_error(path))?;
        Ok(MetricsLog {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(&mut self, m: &EpochMetrics) -> Result<(), FileError> {
        writeln!(self.file, "{}", metrics_csv_row(m))
            .and_then(|_| self.file.flush())
            .map_err(io_error(&self.path))
    }
}

//! File formats: VTK fields, binary checkpoints, CSV tables, JSON summaries
//! and the run manifest.

pub mod checkpoint;
pub mod manifest;
pub mod tables;
pub mod vtk;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use manifest::{sha256_hex, FileEntry, RunManifest};
pub use tables::{read_pairs, read_samples, write_criterion_rows, write_histogram, write_samples, write_streamlines_csv, write_sweep, CriterionRow};
pub use vtk::{parse_vtk, read_vtk, vtk_bytes, write_streamlines_vtk, write_vtk};

/// Creates `path` and hands a buffered writer to `fill`.
pub fn write_file(path: &Path, fill: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    fill(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::format("JSON", e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format("JSON", format!("{}: {e}", path.display())))
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

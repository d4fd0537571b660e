//! File formats for the stage hand-off: Matrix Market matrices and bases,
//! ensemble files, key-value sidecars and result CSVs.

pub mod basis;
pub mod ensemble;
pub mod mtx;
pub mod table;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use basis::{read_basis, write_basis, BASIS_FILE, BASIS_META};
pub use ensemble::{ensemble_path, read_ensemble, write_ensemble, FileEnsembleSource};
pub use mtx::{read_array, read_coordinate, write_array, write_coordinate};
pub use table::{parse_trace_csv, trace_csv, CsvTable};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

/// Writes through a sibling temporary file and renames, so a reader never
/// sees a partial file.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

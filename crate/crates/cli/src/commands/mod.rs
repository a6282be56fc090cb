//! One module per subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use crate::{CliError, CliResult};

pub mod correlate;
pub mod evaluate;
pub mod report;
pub mod spectrum;
pub mod synth;
pub mod tools;

pub(crate) fn create_dir(dir: &Path, code: i32) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::new(code, format!("{}: cannot create directory ({e})", dir.display())))
}

pub(crate) fn write_file(path: &Path, text: &str, code: i32) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::new(code, format!("{}: cannot write ({e})", path.display())))
}

/// Subdirectories of `dir`, sorted by name, as `(name, path)`.
pub(crate) fn subdirs(dir: &Path, code: i32) -> CliResult<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::new(code, format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::new(code, format!("{}: {e}", dir.display())))?;
        let path = entry.path();
        if path.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            out.push((name, path));
        }
    }
    out.sort();
    Ok(out)
}

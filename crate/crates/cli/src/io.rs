//! File helpers: table loading and atomic writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tabenc::table::{from_json, infer_dtypes, parse_csv, Table};
use tempfile::NamedTempFile;

use crate::CliError;

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut tmp = NamedTempFile::new_in(&dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes).map_err(CliError::data)?;
    tmp.persist(path)
        .map_err(|e| CliError::Data(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Reads a `.csv` (header row, dtypes inferred, named after the file stem)
/// or `.json` table.
pub fn load_table(path: &Path) -> Result<Table, CliError> {
    let fail = |e: &dyn std::fmt::Display| CliError::Data(format!("{}: {e}", path.display()));
    match extension(path).as_deref() {
        Some("csv") => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
            let t = parse_csv(&read_bytes(path)?, true).map_err(|e| fail(&e))?;
            Ok(infer_dtypes(&t).with_name(stem))
        }
        Some("json") => from_json(&read_text(path)?).map_err(|e| fail(&e)),
        _ => Err(CliError::Data(format!(
            "{}: expected a .csv or .json table",
            path.display()
        ))),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

/// Table files of a directory in file-name order.
pub fn table_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(extension(p).as_deref(), Some("csv" | "json")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_tables(dir: &Path) -> Result<Vec<Table>, CliError> {
    table_files(dir)?.iter().map(|p| load_table(p)).collect()
}

pub fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{} does not exist",
            path.display()
        )))
    }
}

//! Reference histogram files: 1800 nonnegative reals in `(i, j, k)`
//! lexicographic bin order, separated by whitespace or commas. Lines starting
//! with `#` are ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::error::DomainError;
use crate::grid::GridHistogram;

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: token {index} ({token:?}) is not a number")]
    Parse { path: PathBuf, index: usize, token: String },
    #[error("{path}: {source}")]
    Invalid { path: PathBuf, source: DomainError },
}

pub fn parse_reference(text: &str, path: &Path) -> Result<GridHistogram, ReferenceError> {
    let mut masses = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        for token in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let value: f64 = token.parse().map_err(|_| ReferenceError::Parse {
                path: path.to_path_buf(),
                index: masses.len(),
                token: token.to_string(),
            })?;
            masses.push(value);
        }
    }
    GridHistogram::from_masses(masses).map_err(|source| ReferenceError::Invalid { path: path.to_path_buf(), source })
}

pub fn read_reference(path: &Path) -> Result<GridHistogram, ReferenceError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReferenceError::Io { path: path.to_path_buf(), source })?;
    parse_reference(&text, path)
}

/// One value per line, full precision.
pub fn write_reference(path: &Path, histogram: &GridHistogram) -> Result<(), ReferenceError> {
    let io = |source| ReferenceError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut text = String::with_capacity(histogram.bins().len() * 12);
    for m in histogram.bins() {
        text.push_str(&format!("{m}\n"));
    }
    std::fs::write(path, text).map_err(io)
}

/// File name used for an object's reference inside a reference directory.
pub fn reference_file_name(object: &str) -> String {
    format!("{}.txt", slug(object))
}

/// Lowercase, with runs of non-alphanumerics collapsed to `_`.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.trim().chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

/// Loads references for `objects`. A file path applies to every object; a
/// directory is searched for `<slug>.txt` per object, and objects without a
/// file are left out.
pub fn load_references(path: &Path, objects: &[String]) -> Result<BTreeMap<String, GridHistogram>, ReferenceError> {
    let mut out = BTreeMap::new();
    if path.is_dir() {
        for object in objects {
            let file = path.join(reference_file_name(object));
            if file.exists() {
                out.insert(object.clone(), read_reference(&file)?);
            }
        }
    } else {
        let hist = read_reference(path)?;
        for object in objects {
            out.insert(object.clone(), hist.clone());
        }
    }
    Ok(out)
}

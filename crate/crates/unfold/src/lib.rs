//! File formats, run configuration and the `unfold` command line on top of
//! `unfold-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod graph_io;
pub mod off;
pub mod report;
pub mod sigma_io;
pub mod suites;
pub mod svg;

use std::fs;
use std::path::Path;

use serde::Serialize;

pub use cli::run;
pub use error::CliError;

/// Writes `bytes`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::write(path, bytes).map_err(CliError::io(path))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("value serializes");
    v.push(b'\n');
    v
}

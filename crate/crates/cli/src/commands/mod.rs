pub mod analyze;
pub mod phasematch;
pub mod selftest;
pub mod simulate;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Prints the command summary as pretty JSON on stdout.
pub fn emit<T: Serialize>(summary: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        // A closed pipe (`| head`) is the reader's choice, not a failure.
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Creates `path` (and missing parent directories) and hands a buffered writer to `body`.
pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let fail = |e: std::io::Error| CliError::usage(format!("cannot write {}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(fail)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(fail)?);
    body(&mut w).and_then(|_| w.flush()).map_err(fail)
}

//! CSV and JSON writers. Floats use Rust's shortest round-trip formatting.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use dprof::{Adjacency, DistanceMatrix};

use crate::CliError;

pub type Sink = Box<dyn Write>;

/// A buffered writer to `path`, or to stdout when `path` is `None`.
pub fn open(path: Option<&Path>) -> Result<Sink, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn comment(out: &mut dyn Write, text: &str) -> io::Result<()> {
    writeln!(out, "# {text}")
}

pub fn row<T: std::fmt::Display>(
    out: &mut dyn Write,
    values: impl IntoIterator<Item = T>,
) -> io::Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            out.write_all(b",")?;
        }
        write!(out, "{v}")?;
        first = false;
    }
    out.write_all(b"\n")
}

pub fn header(out: &mut dyn Write, names: &[String]) -> io::Result<()> {
    row(out, names)
}

pub fn matrix(out: &mut dyn Write, d: &DistanceMatrix) -> io::Result<()> {
    for i in 0..d.n() {
        row(out, d.row(i))?;
    }
    Ok(())
}

pub fn adjacency(out: &mut dyn Write, a: &Adjacency) -> io::Result<()> {
    let dense = a.to_dense();
    for r in dense.chunks(a.order()) {
        row(out, r)?;
    }
    Ok(())
}

pub fn json(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

//! CSV and metadata serialization.
//!
//! Floats are written with 17 significant digits in scientific notation,
//! lines end in `\n`, and the sidecar holds no timestamps, so identical
//! inputs give identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiments::{Cell, Table};

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Float(v) => format_float(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => (*s).to_string(),
    }
}

pub fn write_csv<W: Write>(table: &Table, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell_text))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_string(table: &Table) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'a str,
    units: Units,
    config: &'a ExperimentConfig,
    csv: String,
    columns: &'a [&'static str],
    rows: usize,
    truncations: &'a [Vec<usize>],
}

#[derive(Debug, Serialize)]
struct Units {
    frequency: &'static str,
    time: &'static str,
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn metadata_json(config: &ExperimentConfig, table: &Table, out: &Path) -> String {
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.name(),
        units: Units {
            frequency: "MHz (nu = omega / 2 pi)",
            time: "ns",
        },
        config,
        csv: out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        columns: &table.columns,
        rows: table.rows.len(),
        truncations: &table.truncations,
    };
    let mut s = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    s.push('\n');
    s
}

/// Writes `<out>` and `<out>.meta.json`.
pub fn write_outputs(config: &ExperimentConfig, table: &Table, out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(out, csv_string(table)?).map_err(|e| CliError::io(out, e))?;
    let meta = meta_path(out);
    fs::write(&meta, metadata_json(config, table, out)).map_err(|e| CliError::io(&meta, e))?;
    Ok(())
}

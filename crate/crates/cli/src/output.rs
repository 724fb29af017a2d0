use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Writes `rows` as CSV (with header) or a JSON array.
pub fn write_rows<T: Serialize, W: Write>(
    rows: &[T],
    format: Format,
    out: W,
) -> anyhow::Result<()> {
    match format {
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(out);
            for row in rows {
                writer.serialize(row)?;
            }
            writer.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// [`write_rows`] to `path`, or to stdout when no path is given.
pub fn emit<T: Serialize>(rows: &[T], format: Format, path: Option<&Path>) -> anyhow::Result<()> {
    match path {
        Some(p) => write_rows(rows, format, File::create(p)?),
        None => write_rows(rows, format, io::stdout().lock()),
    }
}

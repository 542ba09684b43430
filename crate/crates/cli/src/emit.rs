use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use asym_core::output::CsvTable;
use serde::Serialize;

use crate::args::Format;

/// `asym <version> <config as JSON>`, the first line of every data file.
pub fn config_comment<C: Serialize>(config: &C) -> String {
    let echo = serde_json::to_string(config).expect("config serializes");
    format!("asym {} {echo}", env!("CARGO_PKG_VERSION"))
}

/// Opens `path`, or stdout when absent.
pub fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_table(table: &CsvTable, comment: &str, format: Format, path: Option<&Path>) -> io::Result<()> {
    let mut w = sink(path)?;
    match format {
        Format::Csv => table.write(&mut w, comment)?,
        Format::Json => {
            let value = serde_json::json!({
                "comment": comment,
                "columns": table.header,
                "rows": table.rows,
            });
            serde_json::to_writer_pretty(&mut w, &value)?;
            writeln!(w)?;
        }
    }
    w.flush()
}

pub fn write_json(value: &serde_json::Value, path: Option<&Path>) -> io::Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

use std::fs::File;
use std::io::Write;
use std::path::Path;

use denfunc_core::Sample;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Reads a headerless CSV of reals in `[0,1]`, one observation per row.
pub fn read_sample(path: &Path) -> CliResult<Sample> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| CliError::Io(format!("{shown}: {e}")))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
    let mut data = Vec::new();
    let mut dim = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Io(format!("{shown}: {e}")))?;
        let width = *dim.get_or_insert(record.len());
        if record.len() != width {
            return Err(CliError::Io(format!(
                "{shown}: row {} has {} columns, expected {width}",
                row + 1,
                record.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Io(format!("{shown}: row {}, column {}: `{field}` is not a number", row + 1, col + 1))
            })?;
            data.push(v);
        }
    }
    let dim = dim.ok_or_else(|| CliError::Io(format!("{shown}: no observations")))?;
    Sample::new(data, dim).map_err(|e| CliError::input(&shown, e))
}

/// Writes `value` as pretty JSON followed by a newline to `out`, or stdout.
pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

/// Writes serializable rows as CSV with a header line.
pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> CliResult<()> {
    let err = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut writer = csv::Writer::from_path(path).map_err(err)?;
    for row in rows {
        writer.serialize(row).map_err(err)?;
    }
    writer.flush()?;
    Ok(())
}

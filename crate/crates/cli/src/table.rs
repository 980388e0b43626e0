//! Thin CSV helpers. Numbers are written with the shortest representation
//! that parses back to the identical f64.

use std::path::Path;

use crate::CliError;

pub fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

pub fn header(w: &mut csv::Writer<std::fs::File>, names: &[&str]) -> Result<(), CliError> {
    w.write_record(names).map_err(|e| CliError::Config(e.to_string()))
}

pub fn row(w: &mut csv::Writer<std::fs::File>, values: &[f64]) -> Result<(), CliError> {
    let fields: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    w.write_record(&fields).map_err(|e| CliError::Config(e.to_string()))
}

pub fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Io(path.display().to_string(), io),
        other => CliError::Config(format!("{other:?}")),
    }
}

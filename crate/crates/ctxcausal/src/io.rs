//! CSV ingestion and export.
//!
//! Comma separated, header row required, RFC 4180 quoting. An empty cell
//! marks a missing value and drops its record.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ctxcausal_core::{Column, Dataset, DatasetBuilder, LoadReport, VariableKind};

use crate::error::{AppError, Result};

/// Loads `path` with `target_name` as the binary outcome.
pub fn load_csv(path: impl AsRef<Path>, target_name: &str) -> Result<(Dataset, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_csv(file, target_name)
}

/// Reads CSV text from any reader.
pub fn read_csv<R: Read>(reader: R, target_name: &str) -> Result<(Dataset, LoadReport)> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let mut builder = DatasetBuilder::new(csv.headers()?.iter())?;
    for record in csv.records() {
        builder.push_record(record?.iter())?;
    }
    Ok(builder.finish(target_name)?)
}

/// Writes `data` to `path`, categorical cells as their labels.
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    write_csv(data, std::io::BufWriter::new(file))
}

/// Writes `data` as CSV.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(data.variables().iter().map(|v| v.name.as_str()))?;
    let mut record = Vec::with_capacity(data.variables().len());
    for row in 0..data.n_rows() {
        record.clear();
        for meta in data.variables() {
            let cell = match (&meta.kind, data.column(meta.id)) {
                (VariableKind::Categorical { labels }, Column::Categorical(codes)) => labels[codes[row] as usize].clone(),
                (_, Column::Numeric(values)) => values[row].to_string(),
                _ => unreachable!("dataset kinds match their storage"),
            };
            record.push(cell);
        }
        csv.write_record(&record)?;
    }
    csv.flush().map_err(|e| AppError::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_cells() {
        let text = "A,B,Y\nx,1.5,1\ny,2.5,0\nx,3.5,1\n";
        let (data, report) = read_csv(text.as_bytes(), "Y").unwrap();
        assert_eq!(report.numeric_columns, vec!["B".to_string()]);
        let mut out = Vec::new();
        write_csv(&data, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn quoted_fields() {
        let (data, _) = read_csv("\"A\",Y\n\"a,b\",1\nc,0\n".as_bytes(), "Y").unwrap();
        assert_eq!(data.variable(0).label(0), Some("a,b"));
    }

    #[test]
    fn ragged_record_is_a_data_error() {
        let err = read_csv("A,Y\n1,0\n1\n".as_bytes(), "Y").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}

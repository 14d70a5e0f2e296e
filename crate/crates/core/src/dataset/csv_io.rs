use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, RoleConfig};
use crate::error::{Error, Result};

/// What to do with a row whose selected cell is empty, a missing-value
/// marker, or not a finite real.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    DropRow,
    Fail,
}

const MISSING_MARKERS: [&str; 6] = ["", "na", "nan", "null", "none", "?"];

fn parse_cell(raw: &str) -> std::result::Result<f64, String> {
    let cell = raw.trim();
    if MISSING_MARKERS.iter().any(|m| cell.eq_ignore_ascii_case(m)) {
        return Err(format!("missing value `{cell}`"));
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("non-finite value `{cell}`")),
        Err(_) => Err(format!("cannot parse `{cell}` as a real")),
    }
}

/// Loads the response and predictor columns named by `roles`.
pub fn load_csv(path: impl AsRef<Path>, roles: &RoleConfig, policy: MissingPolicy) -> Result<Dataset> {
    roles.validate()?;
    load_csv_columns(path, &roles.all_columns(), policy)
}

/// Loads the named columns, in the given order. Other columns in the file
/// are ignored and never parsed.
pub fn load_csv_columns(path: impl AsRef<Path>, names: &[String], policy: MissingPolicy) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let indices = names
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut rows_read = 0usize;
    let mut dropped = 0usize;
    let mut row_buf = vec![0.0; names.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::ParseError {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        rows_read += 1;
        let mut ok = true;
        for (slot, (&idx, name)) in indices.iter().zip(names).enumerate() {
            match parse_cell(record.get(idx).unwrap_or("")) {
                Ok(v) => row_buf[slot] = v,
                Err(message) => match policy {
                    MissingPolicy::Fail => {
                        return Err(Error::ParseError { row, column: name.clone(), message })
                    }
                    MissingPolicy::DropRow => {
                        ok = false;
                        break;
                    }
                },
            }
        }
        if ok {
            for (col, v) in columns.iter_mut().zip(&row_buf) {
                col.push(*v);
            }
        } else {
            dropped += 1;
        }
    }

    if dropped > 0 {
        log::warn!(
            "{}: dropped {dropped} of {rows_read} rows with missing or unparseable values",
            path.display()
        );
    }
    log::info!("{}: loaded {} rows", path.display(), rows_read - dropped);
    if rows_read - dropped == 0 {
        return Err(if dropped > 0 { Error::EmptyAfterFiltering } else { Error::EmptyDataset });
    }
    Dataset::from_columns(names.iter().cloned().zip(columns))
}

/// Writes all columns with a header row; values use shortest round-trip
/// formatting so the output is byte-stable.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(data.names())?;
    let cols: Vec<&[f64]> = data.columns().map(|(_, c)| c).collect();
    for i in 0..data.n_rows() {
        writer.write_record(cols.iter().map(|c| format!("{}", c[i])))?;
    }
    writer.flush()?;
    Ok(())
}

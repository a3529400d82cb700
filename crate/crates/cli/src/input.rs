//! CSV ingestion: one observation per row, numeric columns, optional header.

use std::fs::File;
use std::path::Path;

use hdboot::Sample;

use crate::CliError;

/// Reads a numeric matrix. The first row is taken as a header when none of
/// its cells parses as a number. Row numbers in messages count physical
/// records, header included, starting at 1.
pub fn read_matrix(path: &Path) -> Result<Sample, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("{}: cannot open: {e}", path.display())))?;
    parse_matrix(file, &path.display().to_string())
}

pub fn parse_matrix<R: std::io::Read>(reader: R, source: &str) -> Result<Sample, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Input(format!("{source}: row {row}: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if row == 1 && record.iter().all(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(CliError::Input(format!(
                    "{source}: row {row} has {} fields, expected {w}",
                    record.len()
                )))
            }
            Some(_) => {}
        }
        for (j, field) in record.iter().enumerate() {
            let col = j + 1;
            let value: f64 = field.parse().map_err(|_| {
                CliError::Input(format!("{source}: row {row}, column {col}: {field:?} is not a number"))
            })?;
            if !value.is_finite() {
                return Err(CliError::Input(format!(
                    "{source}: row {row}, column {col}: {field:?} is not finite"
                )));
            }
            data.push(value);
        }
        rows += 1;
    }
    let d = width.ok_or_else(|| CliError::Input(format!("{source}: no data rows")))?;
    Sample::new(rows, d, data).map_err(|e| CliError::Input(format!("{source}: {e}")))
}

/// `--mu0` is either a CSV file (one row or one column) or an inline list `1,2,3`.
pub fn read_mu0(arg: &str) -> Result<Vec<f64>, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let m = read_matrix(path)?;
        return if m.n() == 1 || m.d() == 1 {
            Ok(m.as_slice().to_vec())
        } else {
            Err(CliError::Input(format!(
                "{arg}: mu0 file must hold a single row or a single column (got {}×{})",
                m.n(),
                m.d()
            )))
        };
    }
    parse_list(arg).map_err(|e| CliError::Input(format!("--mu0: not a file and {e}")))
}

/// Comma-separated finite reals.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("{t:?} is not a finite number")),
            }
        })
        .collect()
}

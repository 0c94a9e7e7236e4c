//! Light-curve readers. Columns are separated by commas and/or whitespace;
//! `#` lines and blank lines are skipped, and so is a header row ahead of
//! the first observation.

use std::fs;
use std::path::Path;

use tvmod::timeseries::TimeSeries;

use crate::error::{CliError, CliResult};

/// Reads `time` from column 1 and the value from `column` (1-based). Extra
/// columns, such as measurement errors, are ignored.
pub fn read_series(path: &Path, column: usize) -> CliResult<TimeSeries> {
    if column < 2 {
        return Err(CliError::Usage(format!("value column must be 2 or more, got {column}")));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (times, values) = parse_columns(&text, column).map_err(|(line, message)| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })?;
    Ok(TimeSeries::new(times, values)?)
}

fn parse_columns(text: &str, column: usize) -> Result<(Vec<f64>, Vec<f64>), (usize, String)> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut header_seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if times.is_empty() && fields.first().is_some_and(|f| f.parse::<f64>().is_err()) && !header_seen {
            header_seen = true;
            continue;
        }
        if fields.len() < column {
            return Err((i + 1, format!("expected at least {column} columns, found {}", fields.len())));
        }
        let num = |f: &str| -> Result<f64, (usize, String)> {
            f.parse::<f64>().map_err(|_| (i + 1, format!("not a number: {f:?}")))
        };
        times.push(num(fields[0])?);
        values.push(num(fields[column - 1])?);
    }
    if times.is_empty() {
        return Err((0, "no observations".into()));
    }
    Ok((times, values))
}

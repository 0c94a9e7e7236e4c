//! Deterministic writers. Floats are printed with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Column-oriented CSV table with a `#` comment preamble.
pub struct Table {
    comments: Vec<String>,
    header: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self {
            comments: Vec::new(),
            header: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn comment(mut self, c: impl Into<String>) -> Self {
        self.comments.push(c.into());
        self
    }

    pub fn column(mut self, name: impl Into<String>, values: &[f64]) -> Self {
        self.header.push(name.into());
        self.columns.push(values.to_vec());
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        let rows = self.columns.iter().map(Vec::len).max().unwrap_or(0);
        for i in 0..rows {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|c| c.get(i).map_or_else(String::new, |v| fmt_f64(*v)))
                .collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }
}

pub fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    write_text(dir, name, &text)
}

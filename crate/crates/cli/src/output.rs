//! CSV and JSON writers. Numbers carry 12 significant digits in scientific
//! notation so that reruns diff cleanly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use surfspec::Result;

/// `x` with 12 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

pub struct Table {
    header: &'static str,
    rows: Vec<String>,
}

impl Table {
    pub fn new(header: &'static str) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: &[String]) {
        self.rows.push(cells.join(","));
    }

    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        let mut sink: Box<dyn Write> = match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                Box::new(BufWriter::new(File::create(p)?))
            }
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        writeln!(sink, "{}", self.header)?;
        for r in &self.rows {
            writeln!(sink, "{r}")?;
        }
        sink.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// `data.csv` → `data.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

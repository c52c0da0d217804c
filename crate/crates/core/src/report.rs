//! Report writers: CSV tables, JSON summaries and gnuplot data files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Writes `rows` as CSV with a header derived from the row type.
pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV rendered into a string (same format as [`write_csv`]).
pub fn csv_string<S: Serialize>(rows: &[S]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Whitespace-separated columns with a `#` header line, as gnuplot reads them.
pub fn write_dat(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {}", columns.join(" "))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

/// Gnuplot blocks separated by two blank lines (one block per `index`).
pub fn write_dat_blocks(
    path: &Path,
    columns: &[&str],
    blocks: &[(String, Vec<Vec<f64>>)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {}", columns.join(" "))?;
    for (i, (label, rows)) in blocks.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
            writeln!(w)?;
        }
        writeln!(w, "# {label}")?;
        for r in rows {
            let line: Vec<String> = r.iter().map(|v| format!("{v:.12e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One asserted property of a suite run.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Assertion {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            detail: format!("{value:.6e} <= {threshold:.6e}"),
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
            detail: format!("{value:.6e} >= {threshold:.6e}"),
        }
    }

    pub fn holds(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value: f64::from(u8::from(passed)),
            threshold: 1.0,
            detail: detail.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        tau: f64,
        s: f64,
        error: f64,
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = [
            Row {
                tau: 0.5,
                s: 0.0,
                error: 1e-3,
            },
            Row {
                tau: 0.25,
                s: 0.1,
                error: 0.0,
            },
        ];
        let text = csv_string(&rows).unwrap();
        assert_eq!(text, "tau,s,error\n0.5,0.0,0.001\n0.25,0.1,0.0\n");
    }

    #[test]
    fn dat_and_json_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.dat");
        write_dat(&p, &["x", "y"], &[vec![1.0, 2.0]]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# x y\n1.000000000000e0 2.000000000000e0"));
        let j = dir.path().join("a.json");
        write_json(&j, &[1, 2]).unwrap();
        assert_eq!(std::fs::read_to_string(&j).unwrap(), "[\n  1,\n  2\n]\n");
        let a = Assertion::at_most("x", 1.0, 2.0);
        assert!(a.passed);
        assert!(!Assertion::at_least("y", 1.0, 2.0).passed);
    }
}

//! `trace.csv`: one row per accepted step, floats in shortest round-trip form.

use std::io::{BufRead, Write};
use std::path::Path;

use horoflow_core::flow::TraceRow;

use crate::CliError;

const TAIL: [&str; 13] = [
    "volume",
    "k_energy",
    "dissipation",
    "sup_dudt",
    "osc",
    "I_value",
    "sandwich_gap",
    "phi_sup",
    "drift",
    "path_gap",
    "osc_ratio",
    "grad_excess",
    "f_tilde",
];

pub fn header(r: usize) -> String {
    let mut cols = vec!["t".to_string(), "c_t".to_string(), "m_t".to_string()];
    cols.extend((0..r).map(|k| format!("x_t_{k}")));
    cols.extend(TAIL.iter().map(|s| s.to_string()));
    cols.join(",")
}

pub fn format_row(row: &TraceRow<f64>) -> String {
    let mut v = vec![row.t, row.c_t, row.m_t];
    v.extend_from_slice(&row.x_t);
    v.extend([
        row.volume,
        row.k_energy,
        row.dissipation,
        row.sup_dudt,
        row.osc,
        row.i_value,
        row.sandwich_gap,
        row.phi_sup,
        row.drift,
        row.path_gap,
        row.osc_ratio,
        row.grad_excess,
    ]);
    let mut s: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
    s.push(row.f_tilde.map(|x| format!("{x:e}")).unwrap_or_default());
    s.join(",")
}

/// Appends rows to an open trace, flushing after each so partial runs keep their prefix.
pub struct TraceWriter {
    out: std::io::BufWriter<std::fs::File>,
}

impl TraceWriter {
    pub fn create(path: &Path, r: usize) -> Result<Self, CliError> {
        let f = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = Self { out: std::io::BufWriter::new(f) };
        w.line(&header(r))?;
        Ok(w)
    }

    /// Keeps the header and the first `keep` rows of an existing trace.
    pub fn truncate_to(path: &Path, keep: usize) -> Result<Self, CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        let f = std::fs::File::open(path).map_err(io)?;
        let lines: Vec<String> = std::io::BufReader::new(f).lines().take(keep + 1).collect::<Result<_, _>>().map_err(io)?;
        if lines.len() != keep + 1 {
            return Err(CliError::Checkpoint(format!("{} has fewer rows than the checkpoint records", path.display())));
        }
        let f = std::fs::File::create(path).map_err(io)?;
        let mut w = Self { out: std::io::BufWriter::new(f) };
        for l in &lines {
            w.line(l)?;
        }
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<(), CliError> {
        writeln!(self.out, "{s}").and_then(|_| self.out.flush()).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn push(&mut self, row: &TraceRow<f64>) -> Result<(), CliError> {
        self.line(&format_row(row))
    }
}

/// A parsed trace; empty cells read as NaN.
#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut lines = text.lines();
        let columns: Vec<String> = lines.next().unwrap_or_default().split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (k, l) in lines.enumerate() {
            let row: Vec<f64> = l
                .split(',')
                .map(|c| if c.is_empty() { Ok(f64::NAN) } else { c.parse::<f64>() })
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Schema(format!("{} row {}: {e}", path.display(), k + 1)))?;
            if row.len() != columns.len() {
                return Err(CliError::Schema(format!(
                    "{} row {}: {} cells for {} columns",
                    path.display(),
                    k + 1,
                    row.len(),
                    columns.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// `x_t` columns in order.
    pub fn x_columns(&self) -> Vec<Vec<f64>> {
        (0..).map_while(|k| self.column(&format!("x_t_{k}"))).collect()
    }
}

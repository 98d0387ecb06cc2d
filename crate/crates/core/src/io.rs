//! Signal file I/O.
//!
//! Two formats:
//! - JSON: `{"a": ..., "b": ..., "N": ..., "n": ..., "values": [[...], ...]}`,
//!   lossless for f64.
//! - CSV: header `x,c0,...,c{n-1}`, one row per cell with `x` the cell
//!   center. Numbers are emitted with 17 significant digits so values
//!   round-trip bit-exactly; the grid endpoints are reconstructed from the
//!   cell centers (exact up to one rounding).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TvError};
use crate::signal::{Grid, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Json,
    Csv,
}

impl SignalFormat {
    /// Picks a format from a file extension (`.json` / `.csv`).
    pub fn from_path(path: &Path) -> Result<SignalFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(SignalFormat::Json),
            Some("csv") => Ok(SignalFormat::Csv),
            other => Err(TvError::InvalidParams(format!(
                "cannot infer signal format from extension {other:?} (use .json or .csv)"
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SignalJson {
    a: f64,
    b: f64,
    #[serde(rename = "N")]
    n_cells: usize,
    n: usize,
    values: Vec<Vec<f64>>,
}

pub fn save_signal(s: &Signal, path: &Path, format: SignalFormat) -> Result<()> {
    let text = match format {
        SignalFormat::Json => signal_to_json(s)?,
        SignalFormat::Csv => signal_to_csv(s),
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn load_signal(path: &Path, format: SignalFormat) -> Result<Signal> {
    let text = fs::read_to_string(path)?;
    match format {
        SignalFormat::Json => signal_from_json(&text),
        SignalFormat::Csv => signal_from_csv(&text),
    }
}

pub fn signal_to_json(s: &Signal) -> Result<String> {
    let doc = SignalJson {
        a: s.grid().a(),
        b: s.grid().b(),
        n_cells: s.n_cells(),
        n: s.channels(),
        values: (0..s.n_cells()).map(|k| s.row(k).to_vec()).collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn signal_from_json(text: &str) -> Result<Signal> {
    let doc: SignalJson = serde_json::from_str(text)?;
    let grid = Grid::new(doc.a, doc.b, doc.n_cells)?;
    if doc.values.len() != doc.n_cells {
        return Err(TvError::Parse(format!(
            "expected {} rows, found {}",
            doc.n_cells,
            doc.values.len()
        )));
    }
    let mut values = Vec::with_capacity(doc.n_cells * doc.n);
    for (k, row) in doc.values.iter().enumerate() {
        if row.len() != doc.n {
            return Err(TvError::Parse(format!(
                "row {} has {} entries, expected {}",
                k,
                row.len(),
                doc.n
            )));
        }
        values.extend_from_slice(row);
    }
    Signal::new(grid, doc.n, values)
}

pub fn signal_to_csv(s: &Signal) -> String {
    let mut out = String::from("x");
    for c in 0..s.channels() {
        out.push_str(&format!(",c{c}"));
    }
    out.push('\n');
    for k in 0..s.n_cells() {
        out.push_str(&fmt17(s.grid().cell_center(k)));
        for c in 0..s.channels() {
            out.push(',');
            out.push_str(&fmt17(s.value(k, c)));
        }
        out.push('\n');
    }
    out
}

pub fn signal_from_csv(text: &str) -> Result<Signal> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| TvError::Parse("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.is_empty() || cols[0] != "x" || cols.len() < 2 {
        return Err(TvError::Parse(format!(
            "expected header 'x,c0,...', got '{header}'"
        )));
    }
    for (i, col) in cols[1..].iter().enumerate() {
        if *col != format!("c{i}") {
            return Err(TvError::Parse(format!(
                "expected channel column 'c{i}', got '{col}'"
            )));
        }
    }
    let channels = cols.len() - 1;
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != channels + 1 {
            return Err(TvError::Parse(format!(
                "row {} has {} fields, expected {}",
                lineno + 1,
                fields.len(),
                channels + 1
            )));
        }
        for (i, field) in fields.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                TvError::Parse(format!("row {}: cannot parse '{}'", lineno + 1, field))
            })?;
            if !v.is_finite() {
                return Err(TvError::Parse(format!(
                    "row {}: non-finite entry '{}'",
                    lineno + 1,
                    field
                )));
            }
            if i == 0 {
                xs.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if xs.is_empty() {
        return Err(TvError::Parse("CSV has no data rows".into()));
    }
    let n_cells = xs.len();
    let grid = if n_cells == 1 {
        // A single row cannot determine the cell width; use width 1 around x.
        Grid::new(xs[0] - 0.5, xs[0] + 0.5, 1)?
    } else {
        let h = (xs[n_cells - 1] - xs[0]) / (n_cells - 1) as f64;
        if h <= 0.0 || !h.is_finite() {
            return Err(TvError::Parse(
                "x column must be strictly increasing".into(),
            ));
        }
        Grid::new(xs[0] - 0.5 * h, xs[n_cells - 1] + 0.5 * h, n_cells)?
    };
    Signal::new(grid, channels, values)
}

/// 17 significant digits: enough to reproduce any f64 exactly.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

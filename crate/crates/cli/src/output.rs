//! CSV/JSON emission and one-line summaries.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use qotto_core::analysis::{SpectrumTable, TransitionMatrix};
use qotto_core::cycle::SweepRow;
use qotto_core::thermo::{RunHistory, Vertices, LEDGER_COLUMNS};
use qotto_core::{OttoError, Result};

/// Where results go: a CSV file (plus an optional `.json` sibling), or
/// standard output.
pub struct Sink {
    path: Option<PathBuf>,
    json: bool,
}

impl Sink {
    pub fn new(path: Option<PathBuf>, json: bool) -> Self {
        Self { path, json }
    }

    pub fn emit<T: Serialize>(
        &self,
        value: &T,
        csv: impl FnOnce(&mut Vec<u8>) -> Result<()>,
    ) -> io::Result<()> {
        let json = || serde_json::to_string_pretty(value).map_err(io::Error::other);
        match &self.path {
            Some(path) => {
                let mut buf = Vec::new();
                csv(&mut buf).map_err(io::Error::other)?;
                fs::write(path, buf)?;
                if self.json {
                    fs::write(path.with_extension("json"), json()? + "\n")?;
                }
            }
            None if self.json => println!("{}", json()?),
            None => {
                let mut buf = Vec::new();
                csv(&mut buf).map_err(io::Error::other)?;
                io::stdout().write_all(&buf)?;
            }
        }
        Ok(())
    }

    /// Prints a summary line; to standard error when standard output
    /// carries the data.
    pub fn summary(&self, line: &str) {
        if self.path.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".into(), |v| format!("{v:.6}"))
}

pub fn cycle_summary(h: &RunHistory<f64>) -> String {
    let last = h.last();
    format!(
        "mode={} eta={} P={:.6} sigma={:.6} cycles={} status={}",
        last.mode,
        opt(h.cumulative_eta),
        h.cumulative_power,
        last.sigma,
        h.ledgers.len(),
        serde_json::to_value(h.status)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default()
    )
}

pub fn spectrum_summary(t: &SpectrumTable<f64>) -> String {
    let kinks: Vec<String> = t
        .kinks
        .iter()
        .map(|k| format!("E{}@B={:.4}(jump {:.3})", k.level, k.field, k.jump))
        .collect();
    format!(
        "levels={} points={} min_gap(E0,E1)={:.6e} slope_discontinuities=[{}]",
        t.n_levels(),
        t.field_values.len(),
        t.min_gap(0, 1),
        kinks.join(", ")
    )
}

pub fn transitions_summary(mats: &[TransitionMatrix<f64>]) -> String {
    let row_err = mats
        .iter()
        .flat_map(|m| m.row_sums())
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max);
    format!(
        "taus={} levels={:?} max|row_sum-1|={row_err:.2e}",
        mats.len(),
        mats[0].levels
    )
}

/// One row per sweep value: the value, the last cycle's ledger and the
/// cumulative efficiency and power of the run.
pub fn write_sweep_csv<W: Write>(variable: &str, rows: &[SweepRow<f64>], out: W) -> Result<()> {
    let err = |e: csv::Error| OttoError::InvalidArgument(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![variable.to_string()];
    header.extend(LEDGER_COLUMNS.iter().map(|s| s.to_string()));
    header.extend(["eta_cum".to_string(), "power_cum".to_string()]);
    w.write_record(&header).map_err(err)?;
    for row in rows {
        let mut rec = vec![row.value.to_string()];
        rec.extend(row.history.last().record());
        rec.push(
            row.history
                .cumulative_eta
                .map_or_else(String::new, |x| x.to_string()),
        );
        rec.push(row.history.cumulative_power.to_string());
        w.write_record(&rec).map_err(err)?;
    }
    w.flush()
        .map_err(|e| OttoError::InvalidArgument(e.to_string()))
}

/// JSON object mapping each vertex label to its density matrix as separate
/// real and imaginary row arrays.
pub fn write_vertices(path: &Path, v: &Vertices<f64>) -> io::Result<()> {
    let mut obj = Map::new();
    for (label, state) in v.iter() {
        let a = state.rho().as_array();
        let part = |f: fn(&qotto_core::C<f64>) -> f64| -> Vec<Vec<f64>> {
            a.rows()
                .into_iter()
                .map(|r| r.iter().map(f).collect())
                .collect()
        };
        obj.insert(
            label.to_string(),
            json!({ "re": part(|z| z.re), "im": part(|z| z.im) }),
        );
    }
    let doc = serde_json::to_string_pretty(&Value::Object(obj)).map_err(io::Error::other)?;
    fs::write(path, doc + "\n")
}

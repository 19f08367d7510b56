//! CSV tables.

use std::path::Path;

use mrelab_core::diag::DiagSeries;
use mrelab_core::orbit::{OrbitRecord, ORBIT_COLUMNS};

use crate::error::{HarnessError, Result};

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.to_path_buf(), source }
}

/// Shortest round-trip decimal, so identical runs give identical bytes.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:e}")
    }
}

pub fn write_series(path: &Path, series: &DiagSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(series.columns()).map_err(csv_err(path))?;
    for row in series.rows() {
        w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })
}

pub fn write_orbits(path: &Path, records: &[OrbitRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(ORBIT_COLUMNS).map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            fmt_f64(r.base[0]),
            fmt_f64(r.base[1]),
            fmt_f64(r.period),
            r.shift[0].to_string(),
            r.shift[1].to_string(),
            fmt_f64(r.psi),
            r.class.as_str().to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })
}

/// Reads a CSV written by [`write_series`] back into columns.
pub fn read_series(path: &Path) -> Result<DiagSeries> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    let cols: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut series = DiagSeries::new(&cols);
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec.iter().map(|s| s.parse::<f64>().unwrap_or(f64::NAN)).collect();
        series.push(row).map_err(|e| HarnessError::Core { context: path.display().to_string(), source: e })?;
    }
    Ok(series)
}

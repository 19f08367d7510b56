//! Time series of diagnostics and rate fits.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Rows of named columns, one row per sample time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagSeries {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl DiagSeries {
    pub fn new(columns: &[&str]) -> Self {
        DiagSeries { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "row has {} entries, series has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.index_of(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Overwrites one entry; used to fill in quantities known only after
    /// the next sample.
    pub fn set(&mut self, row: usize, name: &str, value: f64) -> Result<()> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::InvalidParameter(format!("no column `{name}`")))?;
        let r = self
            .rows
            .get_mut(row)
            .ok_or_else(|| Error::InvalidParameter(format!("no row {row}")))?;
        r[i] = value;
        Ok(())
    }
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Slope of `ln y` against `t`; `-rate` for `y ~ e^{-rate t}`. Points with
/// `y <= 0` are skipped.
pub fn log_slope(t: &[f64], y: &[f64]) -> Option<f64> {
    let (a, b): (Vec<f64>, Vec<f64>) =
        t.iter().zip(y).filter(|(_, v)| **v > 0.0).map(|(a, v)| (*a, libm::log(*v))).unzip();
    linear_slope(&a, &b)
}

/// Slope of `ln y` against `ln t`. Points with `t <= 0` or `y <= 0` are skipped.
pub fn loglog_slope(t: &[f64], y: &[f64]) -> Option<f64> {
    let (a, b): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(s, v)| **s > 0.0 && **v > 0.0)
        .map(|(s, v)| (libm::log(*s), libm::log(*v)))
        .unzip();
    linear_slope(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_recover_rates() {
        let t: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|s| 3.0 * libm::exp(-0.7 * s)).collect();
        assert!((log_slope(&t, &y).unwrap() + 0.7).abs() < 1e-12);
        let y: Vec<f64> = t.iter().map(|s| 2.0 * libm::pow(*s, -0.5)).collect();
        assert!((loglog_slope(&t, &y).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(linear_slope(&[1.0], &[2.0]), None);
    }

    #[test]
    fn series_checks_width() {
        let mut s = DiagSeries::new(&["t", "x"]);
        assert!(s.push(alloc::vec![0.0]).is_err());
        s.push(alloc::vec![0.0, 1.0]).unwrap();
        s.set(0, "x", 2.0).unwrap();
        assert_eq!(s.column("x").unwrap(), alloc::vec![2.0]);
        assert!(s.column("y").is_none());
    }
}

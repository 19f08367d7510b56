//! Running one scenario and parameter sweeps.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::error::{io_err, ConfigError, HarnessError, Result};
use crate::experiments::{execute, Outcome};
use crate::manifest::{scenario_hash, RunManifest, SCHEMA};
use crate::output::{write_orbits, write_series};
use crate::scenario::{with_override, Scenario};
use crate::snapshot::write_snapshot;

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn write_outputs(dir: &Path, outcome: &Outcome) -> Result<Vec<String>> {
    let mut written = Vec::new();
    for (name, series) in &outcome.tables {
        write_series(&dir.join(name), series)?;
        written.push(name.clone());
    }
    for (name, records) in &outcome.orbit_dumps {
        write_orbits(&dir.join(name), records)?;
        written.push(name.clone());
    }
    if !outcome.snapshots.is_empty() {
        fs::create_dir_all(dir.join("snapshots")).map_err(io_err(dir.join("snapshots")))?;
    }
    for (name, fields) in &outcome.snapshots {
        let refs: Vec<_> = fields.iter().collect();
        write_snapshot(&dir.join("snapshots").join(name), &refs)?;
        written.push(format!("snapshots/{name}"));
    }
    Ok(written)
}

/// Runs `sc` and writes its outputs and `manifest.json` under
/// `<out_root>/<name>/`. A failed run still leaves a manifest carrying the
/// error; the error is returned as well.
pub fn run(sc: &Scenario, out_root: &Path) -> Result<RunManifest> {
    sc.validate()?;
    let dir = out_root.join(&sc.name);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let started = now();
    let result = execute(sc).and_then(|o| write_outputs(&dir, &o).map(|w| (o, w)));
    let mut manifest = RunManifest {
        schema: SCHEMA.to_string(),
        scenario: sc.name.clone(),
        scenario_hash: scenario_hash(sc),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: sc.seed,
        started,
        finished: now(),
        outputs: Vec::new(),
        assertions: Vec::new(),
        metrics: BTreeMap::new(),
        error: None,
        passed: false,
    };
    let failure = match result {
        Ok((outcome, written)) => {
            manifest.passed = outcome.passed();
            manifest.outputs = written;
            manifest.assertions = outcome.assertions;
            manifest.metrics = outcome.metrics;
            None
        }
        Err(e) => {
            manifest.error = Some(e.to_string());
            Some(e)
        }
    };
    manifest.outputs.push("manifest.json".into());
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(io_err(&path))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

/// `key=v1,v2,...`
pub fn parse_axis(axis: &str) -> std::result::Result<(String, Vec<String>), ConfigError> {
    let (key, values) = axis.split_once('=').ok_or_else(|| ConfigError::BadAxis(axis.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::BadAxis(axis.to_string()));
    }
    let values: Vec<String> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect();
    Ok((key.to_string(), values))
}

#[derive(Debug)]
pub struct SweepReport {
    pub runs: Vec<RunManifest>,
    /// Run name and error message.
    pub errors: Vec<(String, String)>,
    pub aggregate: PathBuf,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.runs.iter().all(|m| m.passed)
    }
}

fn sweep_points(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    if axes.is_empty() || axes.iter().any(|(_, v)| v.is_empty()) {
        return Vec::new();
    }
    let mut points = vec![Vec::new()];
    for (key, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

type PointResult = (Vec<(String, String)>, String, std::result::Result<RunManifest, String>);

/// Runs the Cartesian product of `axes` over `template` in parallel under
/// `<out_root>/<template name>/` and writes `aggregate.csv` there with one
/// row per point. Per-run failures are collected, not propagated.
pub fn sweep(template: &Scenario, axes: &[(String, Vec<String>)], out_root: &Path) -> Result<SweepReport> {
    let root = out_root.join(&template.name);
    fs::create_dir_all(&root).map_err(io_err(&root))?;
    let points = sweep_points(axes);
    let results: Vec<PointResult> = points
        .into_par_iter()
        .map(|point| {
            let label: Vec<String> = point.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let name = format!("{}__{}", template.name, label.join("_"));
            let mut sc = template.clone();
            let res = (|| -> Result<RunManifest> {
                for (k, v) in &point {
                    sc = with_override(&sc, k, v)?;
                }
                sc.name = name.clone();
                run(&sc, &root)
            })();
            (point, name, res.map_err(|e| e.to_string()))
        })
        .collect();

    let keys: BTreeSet<String> =
        results.iter().filter_map(|r| r.2.as_ref().ok()).flat_map(|m| m.metrics.keys().cloned()).collect();
    let mut header: Vec<String> = vec!["name".into()];
    header.extend(axes.iter().map(|(k, _)| k.clone()));
    header.extend(["passed".to_string(), "error".to_string()]);
    header.extend(keys.iter().cloned());
    let aggregate = root.join("aggregate.csv");
    let csv_err = |source| HarnessError::Csv { path: aggregate.clone(), source };
    let mut w = csv::Writer::from_path(&aggregate).map_err(csv_err)?;
    w.write_record(&header).map_err(csv_err)?;
    let mut report = SweepReport { runs: Vec::new(), errors: Vec::new(), aggregate: aggregate.clone() };
    for (point, name, res) in results {
        let mut row = vec![name.clone()];
        row.extend(point.into_iter().map(|(_, v)| v));
        match res {
            Ok(m) => {
                row.push(m.passed.to_string());
                row.push(String::new());
                row.extend(keys.iter().map(|k| m.metrics.get(k).map_or(String::new(), |v| crate::output::fmt_f64(*v))));
                report.runs.push(m);
            }
            Err(e) => {
                row.push("false".into());
                row.push(e.clone());
                row.extend(keys.iter().map(|_| String::new()));
                report.errors.push((name, e));
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::Io { path: aggregate.clone(), source: e })?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::read_series;
    use crate::scenario::builtin;

    fn short(name: &str, t_end: &str) -> Scenario {
        with_override(&builtin(name).unwrap(), "time.t_end", t_end).unwrap()
    }

    #[test]
    fn same_seed_same_bytes() {
        let sc = with_override(&short("nonvanishing-shear", "2"), "time.sample_every", "0.5").unwrap();
        let (d1, d2, d3) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run(&sc, d1.path()).unwrap();
        run(&sc, d2.path()).unwrap();
        let read = |d: &tempfile::TempDir| fs::read(d.path().join(&sc.name).join("scalar.csv")).unwrap();
        assert_eq!(read(&d1), read(&d2));
        run(&with_override(&sc, "seed", "5").unwrap(), d3.path()).unwrap();
        assert_ne!(read(&d1), read(&d3));

        let series = read_series(&d1.path().join(&sc.name).join("scalar.csv")).unwrap();
        assert_eq!(series.columns()[0], "t");
        assert_eq!(series.len(), 5);
    }

    #[test]
    fn manifest_records_the_run() {
        let dir = tempfile::tempdir().unwrap();
        let m = run(&short("shear-const", "1"), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("shear-const/manifest.json")).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.scenario_hash, m.scenario_hash);
        assert_eq!(m.scenario_hash.len(), 64);
        assert!(m.outputs.contains(&"scalar.csv".to_string()));
        // T = 1 is too short for the terminal B . grad g check.
        let bgrad = m.assertions.iter().find(|a| a.id == "bgrad_terminal").unwrap();
        assert!(!bgrad.passed && !m.passed);
        for id in ["mean_drift", "max_principle", "l2_monotone"] {
            assert!(m.assertions.iter().any(|a| a.id == id && a.passed), "{id}");
        }
        // The fit window [1, 8] is empty, so the rate is NaN and fails.
        let rate = back.assertions.iter().find(|a| a.id == "rate").unwrap();
        assert!(rate.value.is_nan() && !rate.passed);
    }

    #[test]
    fn sweeps() {
        let dir = tempfile::tempdir().unwrap();
        let sc = short("shear-const", "0.5");
        let empty = sweep(&sc, &[], dir.path()).unwrap();
        assert!(empty.runs.is_empty() && empty.errors.is_empty());
        assert_eq!(fs::read_to_string(&empty.aggregate).unwrap().lines().count(), 1);

        let axes = vec![parse_axis("time.t_end=0.25,0.5").unwrap(), parse_axis("v=const(1),wobble(2)").unwrap()];
        let rep = sweep(&sc, &axes, dir.path()).unwrap();
        assert_eq!(rep.runs.len(), 2);
        assert_eq!(rep.errors.len(), 2);
        assert!(rep.errors.iter().all(|(_, e)| e.contains("params.v")));
        let agg = fs::read_to_string(&rep.aggregate).unwrap();
        assert_eq!(agg.lines().count(), 5);
        assert!(agg.lines().next().unwrap().starts_with("name,time.t_end,v,passed,error"));
    }

    #[test]
    fn axes_and_points() {
        let (k, v) = parse_axis("eps=1e-3, 1e-4").unwrap();
        assert_eq!(k, "eps");
        assert_eq!(v, ["1e-3", "1e-4"]);
        assert!(parse_axis("eps").is_err());
        assert!(parse_axis("=1").is_err());
        let axes = vec![("a".to_string(), vec!["1".into(), "2".into()]), ("b".to_string(), vec!["x".into()])];
        assert_eq!(sweep_points(&axes).len(), 2);
        assert!(sweep_points(&[]).is_empty());
        assert!(sweep_points(&[("a".into(), vec![])]).is_empty());
    }
}

//! Named groups of builtin scenarios and the acceptance criteria they back.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{ConfigError, Result};
use crate::manifest::RunManifest;
use crate::runner::run;
use crate::scenario::{builtin, Scenario};

pub struct Criterion {
    pub id: &'static str,
    pub title: &'static str,
    pub scenarios: &'static [&'static str],
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: "A1", title: "projection identities and O(h^2) refinement", scenarios: &["projections"] },
    Criterion { id: "A2", title: "energy identity", scenarios: &["energy-identity"] },
    Criterion {
        id: "A3",
        title: "decay bounds near constant and linear shear",
        scenarios: &["theorem1-const-shear", "theorem1-linear-shear"],
    },
    Criterion { id: "A4", title: "linearized semigroup decay", scenarios: &["semigroup"] },
    Criterion { id: "A5", title: "explicit shear solution and H1 growth", scenarios: &["shear-cos-growth"] },
    Criterion { id: "A6", title: "relaxation under non-vanishing shear", scenarios: &["shear-const", "nonvanishing-shear"] },
    Criterion { id: "A7", title: "rigid rotation on the disk", scenarios: &["disk-oracle", "disk-rotation"] },
    Criterion { id: "A8", title: "cellular annulus and orbit averages", scenarios: &["cellular-annulus"] },
    Criterion { id: "A9", title: "algebraic relaxation under x|x|^(alpha-1) shear", scenarios: &["shear-power-alpha"] },
    Criterion { id: "A10", title: "M_B membership and the orbit Poincare constant", scenarios: &["mb-machinery"] },
];

pub const SUITES: &[(&str, &[&str])] = &[
    ("projections", &["projections"]),
    ("mre", &["energy-identity", "theorem1-const-shear", "theorem1-linear-shear", "semigroup"]),
    ("scalar", &["shear-cos-growth", "shear-const", "nonvanishing-shear", "shear-power-alpha", "disk-rotation"]),
    ("orbits", &["disk-oracle", "cellular-annulus", "mb-machinery"]),
];

pub fn suite(name: &str) -> std::result::Result<Vec<&'static str>, ConfigError> {
    if name == "all" {
        return Ok(SUITES.iter().flat_map(|(_, s)| s.iter().copied()).collect());
    }
    SUITES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s.to_vec())
        .ok_or_else(|| ConfigError::UnknownScenario(format!("suite {name}")))
}

/// Seed and slack overrides applied to every scenario of a suite.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub slack: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, mut sc: Scenario) -> Scenario {
        if let Some(s) = self.seed {
            sc.seed = s;
        }
        if let Some(s) = self.slack {
            sc.slack = s;
        }
        sc
    }
}

/// Runs the named builtins in parallel. Results keep the input order.
pub fn run_builtins(names: &[&str], out_root: &Path, ov: Overrides) -> Vec<(String, Result<RunManifest>)> {
    names
        .par_iter()
        .map(|name| {
            let res = builtin(name).map_err(Into::into).and_then(|sc| run(&ov.apply(sc), out_root));
            (name.to_string(), res)
        })
        .collect()
}

/// Criterion verdicts over finished runs: a criterion passes when every
/// scenario behind it ran and passed. Criteria without a run are skipped.
pub fn verdicts(results: &[(String, Result<RunManifest>)]) -> Vec<(&'static Criterion, bool, Vec<&str>)> {
    CRITERIA
        .iter()
        .filter_map(|c| {
            let runs: Vec<_> = results.iter().filter(|(n, _)| c.scenarios.contains(&n.as_str())).collect();
            if runs.is_empty() {
                return None;
            }
            let mut failed = Vec::new();
            for (_, r) in &runs {
                match r {
                    Ok(m) => failed.extend(m.assertions.iter().filter(|a| !a.passed).map(|a| a.id.as_str())),
                    Err(_) => failed.push("error"),
                }
            }
            Some((c, failed.is_empty() && runs.len() == c.scenarios.len(), failed))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_name_builtins() {
        for name in suite("all").unwrap() {
            builtin(name).unwrap();
        }
        for c in CRITERIA {
            for s in c.scenarios {
                builtin(s).unwrap();
            }
        }
        assert!(suite("nope").is_err());
    }
}

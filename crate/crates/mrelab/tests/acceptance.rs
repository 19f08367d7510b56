//! Acceptance criteria A1-A10. Each test runs the builtin scenarios behind
//! one criterion and prints a single PASS/FAIL line; the tolerances are the
//! assertion limits inside the experiments.

use std::io::Write;

use mrelab::suites::{run_builtins, verdicts, Overrides, CRITERIA};

fn criterion(id: &str) {
    let c = CRITERIA.iter().find(|c| c.id == id).expect("known criterion");
    let dir = tempfile::tempdir().expect("temp dir");
    let results = run_builtins(c.scenarios, dir.path(), Overrides::default());
    let (_, passed, failed) = verdicts(&results).into_iter().next().expect("criterion has runs");
    let mut detail = Vec::new();
    for (name, r) in &results {
        match r {
            Ok(m) => {
                for a in m.assertions.iter().filter(|a| !a.passed) {
                    detail.push(format!("{name}/{}: {:.4e} vs {:.4e}", a.id, a.value, a.limit));
                }
            }
            Err(e) => detail.push(format!("{name}: {e}")),
        }
    }
    let line = format!(
        "{id} {} {}{}",
        if passed { "PASS" } else { "FAIL" },
        c.title,
        if detail.is_empty() { String::new() } else { format!(" [{}]", detail.join("; ")) }
    );
    // Straight to the stderr handle so the verdict shows without --nocapture.
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(passed, "{line} (failed: {})", failed.join(", "));
}

#[test]
fn a1_projections() {
    criterion("A1");
}

#[test]
fn a2_energy_identity() {
    criterion("A2");
}

#[test]
fn a3_decay_bounds() {
    criterion("A3");
}

#[test]
fn a4_semigroup() {
    criterion("A4");
}

#[test]
fn a5_explicit_solution() {
    criterion("A5");
}

#[test]
fn a6_nonvanishing_shear() {
    criterion("A6");
}

#[test]
fn a7_disk_rotation() {
    criterion("A7");
}

#[test]
fn a8_cellular_annulus() {
    criterion("A8");
}

/// Expected to fail: the measured exponent is -1/(2 alpha).
#[test]
fn a9_power_shear() {
    criterion("A9");
}

#[test]
fn a10_mb_machinery() {
    criterion("A10");
}

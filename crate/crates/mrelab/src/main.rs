use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mrelab::manifest::RunManifest;
use mrelab::runner::{parse_axis, run, sweep};
use mrelab::scenario::{builtin, Scenario, BUILTIN};
use mrelab::suites::{run_builtins, suite, verdicts, Overrides};

#[derive(Parser)]
#[command(name = "mrelab", version, about = "Numerical experiments for Darcy-type magnetic relaxation")]
struct Cli {
    /// Output root; runs go to <out>/<scenario name>/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the relative slack on monitored bounds.
    #[arg(long, global = true)]
    slack: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario: a TOML file or a builtin name.
    Run { scenario: String },
    /// Run a scenario over the product of parameter axes.
    Sweep {
        template: String,
        /// key=v1,v2,... (repeatable)
        #[arg(long = "grid", required = true)]
        grid: Vec<String>,
    },
    /// Run a suite of builtins and report the acceptance criteria.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// List builtin scenarios.
    List,
}

fn load(arg: &str) -> anyhow::Result<Scenario> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        Ok(Scenario::from_toml(&text).with_context(|| format!("in {arg}"))?)
    } else {
        Ok(builtin(arg)?)
    }
}

fn out_root(cli_out: &Option<PathBuf>, sc: Option<&Scenario>) -> PathBuf {
    cli_out.clone().or_else(|| sc.and_then(|s| s.out.clone())).unwrap_or_else(|| PathBuf::from("runs"))
}

fn report(m: &RunManifest) {
    for a in &m.assertions {
        let verdict = if a.passed { "ok  " } else { "FAIL" };
        let rel = match a.relation {
            mrelab::manifest::Relation::Le => "<=",
            mrelab::manifest::Relation::Ge => ">=",
        };
        println!("  {verdict} {:<28} {:>12.4e} {rel} {:.4e}  {}", a.id, a.value, a.limit, a.description);
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(true)` when every assertion passed; errors exit with status 2.
fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    let ov = Overrides { seed: cli.seed, slack: cli.slack };
    match &cli.cmd {
        Cmd::List => {
            for (name, _) in BUILTIN {
                println!("{name}");
            }
            Ok(true)
        }
        Cmd::Run { scenario } => {
            let sc = ov.apply(load(scenario)?);
            let root = out_root(&cli.out, Some(&sc));
            let m = run(&sc, &root).with_context(|| format!("scenario {}", sc.name))?;
            println!("{} {}", sc.name, if m.passed { "PASS" } else { "FAIL" });
            report(&m);
            println!("outputs in {}", root.join(&sc.name).display());
            Ok(m.passed)
        }
        Cmd::Sweep { template, grid } => {
            let sc = ov.apply(load(template)?);
            let axes = grid.iter().map(|g| parse_axis(g)).collect::<Result<Vec<_>, _>>()?;
            let root = out_root(&cli.out, Some(&sc));
            let rep = sweep(&sc, &axes, &root)?;
            for m in &rep.runs {
                println!("{} {}", m.scenario, if m.passed { "PASS" } else { "FAIL" });
            }
            for (name, e) in &rep.errors {
                println!("{name} ERROR {e}");
            }
            println!("aggregate: {}", rep.aggregate.display());
            Ok(rep.passed())
        }
        Cmd::Verify { suite: name } => {
            let names = suite(name)?;
            let root = out_root(&cli.out, None);
            let results = run_builtins(&names, &root, ov);
            let mut ok = true;
            for (name, r) in &results {
                match r {
                    Ok(m) => {
                        println!("{name} {}", if m.passed { "PASS" } else { "FAIL" });
                        report(m);
                        ok &= m.passed;
                    }
                    Err(e) => {
                        println!("{name} ERROR {e}");
                        ok = false;
                    }
                }
            }
            println!();
            for (c, passed, failed) in verdicts(&results) {
                let tail = if failed.is_empty() { String::new() } else { format!(" (failed: {})", failed.join(", ")) };
                println!("{} {} {}{tail}", c.id, if passed { "PASS" } else { "FAIL" }, c.title);
            }
            Ok(ok)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> anyhow::Result<bool> {
        dispatch(Cli::try_parse_from(std::iter::once("mrelab").chain(args.iter().copied()))?)
    }

    #[test]
    fn run_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert!(go(&["list"]).unwrap());
        assert!(go(&["run", "disk-rotation", "--out", out]).unwrap());
        assert!(dir.path().join("disk-rotation/manifest.json").exists());

        let bad = dir.path().join("bad.toml");
        std::fs::write(&bad, "name = \"x\"\n").unwrap();
        assert!(go(&["run", bad.to_str().unwrap(), "--out", out]).is_err());
        let e = go(&["run", "no-such", "--out", out]).unwrap_err();
        assert!(format!("{e:#}").contains("no-such"));
        assert!(go(&["verify", "--suite", "nope", "--out", out]).is_err());
        assert!(go(&["sweep", "shear-const", "--grid", "eps", "--out", out]).is_err());
        assert!(Cli::try_parse_from(["mrelab", "sweep", "shear-const"]).is_err());
    }

    #[test]
    fn seed_override_reaches_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        go(&["run", "disk-rotation", "--seed", "42", "--out", out]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("disk-rotation/manifest.json")).unwrap();
        let m: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(m.seed, 42);
    }
}

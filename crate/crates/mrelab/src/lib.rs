//! Scenario files, run outputs and the command line around `mrelab-core`.
//!
//! A run reads a TOML scenario, executes one experiment and writes CSV
//! tables, binary field snapshots and a `manifest.json` with every checked
//! assertion under `<out>/<scenario name>/`.

pub mod error;
pub mod experiments;
pub mod manifest;
pub mod output;
pub mod runner;
pub mod scenario;
pub mod snapshot;
pub mod suites;

pub use error::{ConfigError, HarnessError, Result};
pub use manifest::{Assertion, RunManifest};
pub use runner::{run, sweep};
pub use scenario::{builtin, Scenario};

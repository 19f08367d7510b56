//! Scenario files.
//!
//! A scenario is one TOML document naming the module, the experiment, the
//! grid, the time window and the analytic families used for `gamma`, `V`
//! and `psi`. Unknown keys are rejected; every value is checked before a
//! run starts and errors carry the dotted key path.

use std::path::PathBuf;
use std::str::FromStr;

use mrelab_core::scalar::{scalar_cfl_limit, AdvectingField};
use mrelab_core::{Grid, Profile, ShearProfile};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    MreChannel,
    ScalarRelax,
    OrbitGeometry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Projections,
    EnergyIdentity,
    Theorem1,
    Semigroup,
    ExplicitSolution,
    ShearDecay,
    PowerShear,
    DiskRotation,
    DiskOracle,
    CellularAnnulus,
    MbMachinery,
}

impl Experiment {
    pub fn target(self) -> Target {
        use Experiment::*;
        match self {
            Projections | EnergyIdentity | Theorem1 | Semigroup => Target::MreChannel,
            ExplicitSolution | ShearDecay | PowerShear | DiskRotation => Target::ScalarRelax,
            DiskOracle | CellularAnnulus | MbMachinery => Target::OrbitGeometry,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Channel,
    Torus,
    Disk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub domain: DomainKind,
    pub n1: usize,
    pub n2: usize,
    /// Channel bounds, default `(-1, 1)`.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, ConfigError> {
        let g = match self.domain {
            DomainKind::Channel => Grid::channel_on(self.n1, self.n2, self.lo.unwrap_or(-1.0), self.hi.unwrap_or(1.0)),
            DomainKind::Torus => Grid::torus(self.n1, self.n2),
            DomainKind::Disk => Grid::disk(self.n1, self.n2),
        };
        g.map_err(|e| ConfigError::invalid("grid", e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: Option<f64>,
    pub sample_every: Option<f64>,
    pub dt: Option<f64>,
}

/// A single number or a list of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Background shear of the channel system, e.g. `linear(1, 0.05)`.
    pub gamma: Option<String>,
    /// Shear profile of the scalar equation, e.g. `cos(0.5)`.
    pub v: Option<String>,
    /// Stream function family: `sinsin` or `rotation`.
    pub psi: Option<String>,
    pub eps: Option<OneOrMany>,
    pub alpha: Option<OneOrMany>,
    /// Additive constant of the initial datum.
    pub c: Option<f64>,
    /// Initial datum family: `random` or `cos-sin`.
    pub g0: Option<String>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    /// Number of random samples.
    pub samples: Option<usize>,
    /// `[psi_lo, psi_hi]` of an annulus.
    pub region: Option<[f64; 2]>,
    /// Window of a slope fit.
    pub fit: Option<[f64; 2]>,
    pub snapshot_every: Option<f64>,
    /// Side of the torus grid used next to a disk grid.
    pub n_torus: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub target: Target,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Relative slack on the monitored bound ratios.
    #[serde(default = "default_slack")]
    pub slack: f64,
    pub out: Option<PathBuf>,
    pub grid: GridSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub params: Params,
}

fn default_slack() -> f64 {
    0.1
}

fn positive(path: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(ConfigError::invalid(path, format!("must be positive, got {x}"))),
        _ => Ok(()),
    }
}

pub fn parse_profile(path: &str, s: &str) -> Result<Profile, ConfigError> {
    Profile::from_str(s).map_err(|e| ConfigError::invalid(path, e.to_string()))
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        if text.trim().is_empty() {
            return Err(ConfigError::Empty);
        }
        let sc: Scenario = toml::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(ConfigError::invalid("name", "must not be empty"));
        }
        if self.experiment.target() != self.target {
            return Err(ConfigError::invalid(
                "target",
                format!("experiment {:?} belongs to {:?}", self.experiment, self.experiment.target()),
            ));
        }
        if !(self.slack >= 0.0 && self.slack.is_finite()) {
            return Err(ConfigError::invalid("slack", "must be a finite non-negative number"));
        }
        let grid = self.grid.build()?;
        positive("time.t_end", self.time.t_end)?;
        positive("time.sample_every", self.time.sample_every)?;
        positive("time.dt", self.time.dt)?;
        let p = &self.params;
        for (path, v) in [("params.eps", &p.eps), ("params.alpha", &p.alpha)] {
            if let Some(v) = v {
                if v.values().is_empty() {
                    return Err(ConfigError::invalid(path, "empty list"));
                }
                for x in v.values() {
                    positive(path, Some(x))?;
                }
            }
        }
        if let Some(g) = &p.gamma {
            let prof = parse_profile("params.gamma", g)?;
            if grid.is_channel() {
                let c0 = ShearProfile::new(prof, grid).map(|s| s.c0()).unwrap_or(0.0);
                if !(c0 > 0.0) {
                    return Err(ConfigError::invalid("params.gamma", "the shear must not vanish (min |gamma| > 0)"));
                }
            }
        }
        if let Some(v) = &p.v {
            parse_profile("params.v", v)?;
        }
        if let Some(psi) = &p.psi {
            if psi != "sinsin" && psi != "rotation" {
                return Err(ConfigError::invalid("params.psi", format!("unknown family `{psi}`")));
            }
        }
        if let Some(g0) = &p.g0 {
            if g0 != "random" && g0 != "cos-sin" {
                return Err(ConfigError::invalid("params.g0", format!("unknown datum `{g0}`")));
            }
        }
        if let Some([a, b]) = p.region {
            if !(a < b) {
                return Err(ConfigError::invalid("params.region", "need lo < hi"));
            }
        }
        if let Some([a, b]) = p.fit {
            if !(0.0 <= a && a < b) {
                return Err(ConfigError::invalid("params.fit", "need 0 <= lo < hi"));
            }
        }
        positive("params.snapshot_every", p.snapshot_every)?;
        self.check_domain(&grid)?;
        // Scalar steps are fixed by the field and the grid, so a requested
        // step can be checked here.
        if let (Some(dt), Some(field)) = (self.time.dt, self.scalar_field()?) {
            let limit = scalar_cfl_limit(&field, &grid);
            if dt > limit {
                return Err(ConfigError::invalid("time.dt", format!("{dt} exceeds the stability limit {limit}")));
            }
        }
        Ok(())
    }

    fn check_domain(&self, grid: &Grid) -> Result<(), ConfigError> {
        use Experiment::*;
        let want = match self.experiment {
            Projections | EnergyIdentity | Theorem1 | Semigroup | ShearDecay | PowerShear => DomainKind::Channel,
            ExplicitSolution | CellularAnnulus => DomainKind::Torus,
            DiskRotation | DiskOracle | MbMachinery => DomainKind::Disk,
        };
        if self.grid.domain != want {
            return Err(ConfigError::invalid("grid.domain", format!("{:?} needs a {want:?} grid", self.experiment)));
        }
        if matches!(self.experiment, EnergyIdentity | Theorem1) && !grid.is_channel() {
            return Err(ConfigError::invalid("grid.domain", "channel required"));
        }
        Ok(())
    }

    /// The advecting field of scalar experiments, if it is fixed by the
    /// scenario.
    pub fn scalar_field(&self) -> Result<Option<AdvectingField>, ConfigError> {
        use Experiment::*;
        Ok(match self.experiment {
            ExplicitSolution | ShearDecay => match &self.params.v {
                Some(v) => Some(AdvectingField::Shear(parse_profile("params.v", v)?)),
                None => None,
            },
            DiskRotation | DiskOracle => Some(AdvectingField::Rotation),
            CellularAnnulus => Some(AdvectingField::SinSin),
            _ => None,
        })
    }

    pub fn require_t_end(&self) -> Result<f64, ConfigError> {
        self.time.t_end.ok_or_else(|| ConfigError::invalid("time.t_end", "required"))
    }

    pub fn require_sample_every(&self) -> Result<f64, ConfigError> {
        self.time.sample_every.ok_or_else(|| ConfigError::invalid("time.sample_every", "required"))
    }

    pub fn require_profile(&self, key: &str) -> Result<Profile, ConfigError> {
        let (path, v) = match key {
            "gamma" => ("params.gamma", &self.params.gamma),
            _ => ("params.v", &self.params.v),
        };
        let s = v.as_ref().ok_or_else(|| ConfigError::invalid(path, "required"))?;
        parse_profile(path, s)
    }
}

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        /// Scenarios shipped with the crate, by name.
        pub const BUILTIN: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*
        ];
    };
}

builtin!(
    "projections",
    "energy-identity",
    "theorem1-const-shear",
    "theorem1-linear-shear",
    "semigroup",
    "shear-cos-growth",
    "shear-const",
    "nonvanishing-shear",
    "shear-power-alpha",
    "disk-rotation",
    "disk-oracle",
    "cellular-annulus",
    "mb-machinery",
);

pub fn builtin(name: &str) -> Result<Scenario, ConfigError> {
    let text = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::UnknownScenario(name.to_string()))?;
    Scenario::from_toml(text)
}

/// Parses `value` as a TOML scalar (integer, float, boolean) or falls back
/// to a string.
fn scalar_value(value: &str) -> toml::Value {
    if let Ok(i) = value.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = value.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if let Ok(b) = value.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    toml::Value::String(value.to_string())
}

/// Sets `key` to `value` and re-validates. A bare key names a top-level
/// field when one exists (`seed`, `slack`, `name`) and a `params` entry
/// otherwise; dotted keys (`grid.n2`, `time.t_end`) are taken literally.
pub fn with_override(sc: &Scenario, key: &str, value: &str) -> Result<Scenario, ConfigError> {
    let mut doc = toml::Value::try_from(sc).map_err(|e| ConfigError::invalid(key, e.to_string()))?;
    let path: Vec<&str> = if key.contains('.') {
        key.split('.').collect()
    } else if matches!(key, "seed" | "slack" | "name" | "out") {
        vec![key]
    } else {
        vec!["params", key]
    };
    let mut v = scalar_value(value);
    // Integer-valued floats stay floats where the schema wants one.
    if let (toml::Value::Integer(i), true) = (&v, !matches!(path.last(), Some(&"seed" | &"n1" | &"n2" | &"k" | &"m" | &"samples" | &"n_torus"))) {
        v = toml::Value::Float(*i as f64);
    }
    let mut cur = &mut doc;
    for (i, seg) in path.iter().enumerate() {
        let table = cur.as_table_mut().ok_or_else(|| ConfigError::invalid(key, "not a table"))?;
        if i + 1 == path.len() {
            table.insert(seg.to_string(), v.clone());
            break;
        }
        cur = table.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let text = toml::to_string(&doc).map_err(|e| ConfigError::invalid(key, e.to_string()))?;
    Scenario::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_validate() {
        for (name, _) in BUILTIN {
            let sc = builtin(name).unwrap();
            assert_eq!(&sc.name, name);
        }
    }

    #[test]
    fn empty_and_unknown_keys() {
        assert!(matches!(Scenario::from_toml("  \n"), Err(ConfigError::Empty)));
        let mut text = BUILTIN[0].1.to_string();
        text.push_str("\nbogus = 1\n");
        assert!(matches!(Scenario::from_toml(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn errors_name_the_key() {
        let sc = builtin("shear-const").unwrap();
        let err = with_override(&sc, "v", "wobble(3)").unwrap_err();
        assert!(err.to_string().starts_with("params.v"), "{err}");
        let err = with_override(&sc, "time.dt", "5").unwrap_err();
        assert!(err.to_string().starts_with("time.dt"), "{err}");
        let err = with_override(&sc, "grid.n1", "7").unwrap_err();
        assert!(err.to_string().starts_with("grid"), "{err}");
    }

    #[test]
    fn invalid_values() {
        assert!(matches!(builtin("no-such"), Err(ConfigError::UnknownScenario(_))));
        let sc = builtin("semigroup").unwrap();
        let e = with_override(&sc, "gamma", "const(0)").unwrap_err();
        assert!(e.to_string().contains("params.gamma"), "{e}");
        let e = with_override(&sc, "grid.domain", "disk").unwrap_err();
        assert!(e.to_string().contains("grid"), "{e}");
        let e = with_override(&sc, "slack", "-1").unwrap_err();
        assert!(e.to_string().starts_with("slack"), "{e}");
    }

    #[test]
    fn overrides() {
        let sc = builtin("theorem1-const-shear").unwrap();
        let o = with_override(&sc, "eps", "0.001").unwrap();
        assert_eq!(o.params.eps, Some(OneOrMany::One(1e-3)));
        let o = with_override(&sc, "seed", "9").unwrap();
        assert_eq!(o.seed, 9);
        let o = with_override(&sc, "time.t_end", "2").unwrap();
        assert_eq!(o.time.t_end, Some(2.0));
    }
}

//! Run manifests (`manifest.json`).

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::scenario::Scenario;

pub const SCHEMA: &str = "mrelab-manifest/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

/// One checked inequality `value <relation> limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub id: String,
    pub description: String,
    #[serde(deserialize_with = "nan_from_null")]
    pub value: f64,
    pub relation: Relation,
    #[serde(deserialize_with = "nan_from_null")]
    pub limit: f64,
    pub passed: bool,
}

impl Assertion {
    pub fn new(id: impl Into<String>, description: impl Into<String>, value: f64, relation: Relation, limit: f64) -> Self {
        let passed = match relation {
            Relation::Le => value <= limit,
            Relation::Ge => value >= limit,
        };
        Assertion { id: id.into(), description: description.into(), value, relation, limit, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub scenario: String,
    /// SHA-256 of the scenario serialized as JSON, hex encoded.
    pub scenario_hash: String,
    pub code_version: String,
    pub seed: u64,
    /// Unix time in seconds.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<String>,
    pub assertions: Vec<Assertion>,
    #[serde(deserialize_with = "nan_map_from_null")]
    pub metrics: BTreeMap<String, f64>,
    pub error: Option<String>,
    pub passed: bool,
}

pub fn scenario_hash(sc: &Scenario) -> String {
    let bytes = serde_json::to_vec(sc).unwrap_or_default();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

// JSON has no NaN; serde_json writes it as null.
fn nan_from_null<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn nan_map_from_null<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
    let m = BTreeMap::<String, Option<f64>>::deserialize(d)?;
    Ok(m.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
}

use std::fmt::Display;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use foldkit_core::cohom::{CocycleSpec, CycleSpec};
use foldkit_core::domain::DomainSpec;
use foldkit_core::form::FormSpec;
use foldkit_core::models::BundleSpec;

/// Malformed or unreadable input. Exit status 2.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct InputError(pub String);

impl InputError {
    pub fn from<E: Display>(context: &str) -> impl FnOnce(E) -> InputError + '_ {
        move |e| InputError(format!("{context}: {e}"))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// A square map with an optional domain and base point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapSpec {
    pub vars: Vec<String>,
    pub components: Vec<String>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub point: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MorseSpec {
    pub f: String,
    pub a: String,
    #[serde(default = "default_s")]
    pub s: String,
    #[serde(default = "default_t")]
    pub t: String,
    pub window: (f64, f64),
}

fn default_s() -> String {
    "s".into()
}

fn default_t() -> String {
    "t".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub rows: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleList {
    pub cycles: Vec<CycleSpec>,
}

/// Everything needed for both invariants of one bundle form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifyInput {
    pub cocycle: CocycleSpec,
    pub bundle: BundleSpec,
    pub form: FormSpec,
    pub cycles: Vec<CycleSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutPoints {
    pub centers: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
}

//! Versioned JSON form of a scenario, and the bundled scenarios.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Scenario;
use crate::limits::GluingOperator;
use crate::measures::{DiscreteMeasure, Space};
use crate::scalar::{ExtReal, Scalar};

pub const SCHEMA_VERSION: u32 = 1;

/// Names of the scenarios shipped with the crate.
pub const BUILTIN: [&str; 4] = ["counterexample_inf", "counterexample_M2", "benchmark_line5", "gluing_line"];

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar + Serialize + DeserializeOwned")]
struct Repr<T> {
    schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(rename = "X")]
    x: Space<T>,
    #[serde(rename = "Y")]
    y: Space<T>,
    c: Vec<Vec<ExtReal<T>>>,
    #[serde(rename = "L")]
    l: Vec<ExtReal<T>>,
    #[serde(rename = "H")]
    h: Vec<Vec<ExtReal<T>>>,
    mu: DiscreteMeasure<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gluing: Option<GluingRepr<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GluingRepr<T> {
    map: Vec<Vec<Vec<usize>>>,
    constant: T,
}

/// A scenario together with its optional name and gluing operator.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioFile<T = f64> {
    pub name: Option<String>,
    pub scenario: Scenario<T>,
    pub gluing: Option<GluingOperator<T>>,
}

impl<T: Scalar + Serialize + DeserializeOwned> ScenarioFile<T> {
    /// Parses and validates; errors carry the JSON path of the offending
    /// field.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let repr: Repr<T> = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::scenario(path, e.into_inner().to_string())
        })?;
        if repr.schema != SCHEMA_VERSION {
            return Err(Error::scenario("schema", format!("unsupported version {}", repr.schema)));
        }
        let scenario = Scenario::new(repr.x, repr.y, repr.c, repr.l, repr.h, repr.mu)?;
        let gluing = repr.gluing.map(|g| GluingOperator::new(g.map, g.constant, scenario.nx(), scenario.ny())).transpose()?;
        Ok(ScenarioFile { name: repr.name, scenario, gluing })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let s = &self.scenario;
        let repr = Repr {
            schema: SCHEMA_VERSION,
            name: self.name.clone(),
            x: s.space_x().clone(),
            y: s.space_y().clone(),
            c: s.c().to_vec(),
            l: s.l().to_vec(),
            h: s.h().to_vec(),
            mu: s.mu().clone(),
            gluing: self.gluing.as_ref().map(|g| GluingRepr { map: g.map().to_vec(), constant: g.constant() }),
        };
        Ok(serde_json::to_string_pretty(&repr)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()? + "\n")?;
        Ok(())
    }
}

fn builtin_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "counterexample_inf" => include_str!("../scenarios/counterexample_inf.json"),
        "counterexample_M2" => include_str!("../scenarios/counterexample_M2.json"),
        "benchmark_line5" => include_str!("../scenarios/benchmark_line5.json"),
        "gluing_line" => include_str!("../scenarios/gluing_line.json"),
        _ => return None,
    })
}

/// One of the [`BUILTIN`] scenarios, by name (with or without `.json`).
pub fn load_builtin(name: &str) -> Result<ScenarioFile> {
    let key = name.strip_suffix(".json").unwrap_or(name);
    let text = builtin_text(key).ok_or_else(|| Error::scenario("name", format!("no bundled scenario `{name}`")))?;
    ScenarioFile::from_json_str(text)
}

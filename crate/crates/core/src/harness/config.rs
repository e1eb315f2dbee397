use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Run settings shared by every scenario. Loaded from TOML; command-line
/// flags and `key=value` overrides are applied on top.
///
/// ```toml
/// seed = 7
/// budget = 20000
/// tolerance = 1e-6
/// scenarios = ["moreau-abs", "cylinder-no-circumcenter"]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Evaluation budget handed to the solvers; `None` keeps their defaults.
    pub budget: Option<usize>,
    /// Replaces the tolerance of every numeric expectation.
    pub tolerance: Option<f64>,
    /// Scenarios run by `rprox run` without a name; empty means all.
    pub scenarios: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            budget: None,
            tolerance: None,
            scenarios: vec![],
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Applies `seed`, `budget` and `tolerance` overrides.
    pub fn apply(&mut self, overrides: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in overrides {
            let bad = |e: &dyn std::fmt::Display| Error::InvalidInput(format!("{k} = {v}: {e}"));
            match k.as_str() {
                "seed" => self.seed = v.parse().map_err(|e| bad(&e))?,
                "budget" => self.budget = Some(v.parse().map_err(|e| bad(&e))?),
                "tolerance" => {
                    let t: f64 = v.parse().map_err(|e| bad(&e))?;
                    if !(t >= 0.0) {
                        return Err(bad(&"must be nonnegative"));
                    }
                    self.tolerance = Some(t);
                }
                _ => return Err(Error::UnknownKey(k.clone())),
            }
        }
        Ok(())
    }
}

/// Parses `key=value` pairs.
pub fn parse_overrides<I, S>(items: I) -> Result<BTreeMap<String, String>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    items
        .into_iter()
        .map(|s| {
            let s = s.as_ref();
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::InvalidInput(format!("override `{s}` is not key=value")))
        })
        .collect()
}

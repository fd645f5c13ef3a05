//! Configuration files: JSON merged over the reference configuration.
//!
//! Keys missing from the file fall back to the reference values and are
//! reported; keys the schema does not know are rejected with their path.
//! Object keys starting with `_` are free-form annotations and are skipped.

use std::fs;
use std::path::Path;

use loadcycle_core::error::ConfigError;
use loadcycle_core::RunConfig;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not valid JSON: {source}")]
    Syntax {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub config: RunConfig,
    /// Dotted paths of the keys that took their reference value, shallowest
    /// first: a missing section is reported once, not per leaf.
    pub defaulted: Vec<String>,
}

impl ResolvedConfig {
    /// The reference value substituted at `path`.
    pub fn default_value(&self, path: &str) -> Option<Value> {
        let reference = serde_json::to_value(RunConfig::reference()).ok()?;
        path.split('.').try_fold(reference, |v, key| v.get(key).cloned())
    }
}

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

fn merge(base: &mut Value, user: &Value, path: &str, defaulted: &mut Vec<String>) -> Result<(), ConfigError> {
    let (Value::Object(base), Value::Object(user)) = (&mut *base, user) else {
        let what = if path.is_empty() { "the configuration root" } else { "this key" };
        return Err(ConfigError::invalid(path, format!("{what} must be a JSON object")));
    };
    for (key, value) in user {
        if key.starts_with('_') {
            continue;
        }
        let here = join(path, key);
        match base.get_mut(key) {
            None => return Err(ConfigError::invalid(here, "unknown key")),
            Some(slot @ Value::Object(_)) => merge(slot, value, &here, defaulted)?,
            Some(slot) => *slot = value.clone(),
        }
    }
    defaulted.extend(base.keys().filter(|k| !user.contains_key(*k)).map(|k| join(path, k)));
    Ok(())
}

/// Merges `user` over the reference configuration and validates the result.
pub fn resolve(user: &Value) -> Result<ResolvedConfig, ConfigError> {
    let mut merged = serde_json::to_value(RunConfig::reference())
        .map_err(|e| ConfigError::invalid("", format!("reference configuration does not serialize: {e}")))?;
    let mut defaulted = Vec::new();
    merge(&mut merged, user, "", &mut defaulted)?;
    let config: RunConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::invalid(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(ResolvedConfig { config, defaulted })
}

pub fn parse_config(text: &str, origin: &str) -> Result<ResolvedConfig, LoadError> {
    let value: Value =
        serde_json::from_str(text).map_err(|source| LoadError::Syntax { path: origin.to_string(), source })?;
    Ok(resolve(&value)?)
}

pub fn load_config(path: &Path) -> Result<ResolvedConfig, LoadError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: origin.clone(), source })?;
    parse_config(&text, &origin)
}

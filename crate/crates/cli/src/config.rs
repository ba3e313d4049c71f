//! Parameter maps assembled from a JSON file and `--param key=value` flags.
//!
//! A config file is either a bare parameter object or
//! `{"scenario": name, "parameters": {...}}`. Flag values are parsed as JSON
//! when possible and taken as strings otherwise; dotted keys reach into nested
//! objects (`crystal.n_o=2.0`). Each command deserializes the merged map into
//! its own parameter struct, which rejects unknown keys.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// One `--param` flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub key: String,
    pub value: Value,
}

/// Value parser for `--param`.
pub fn parse_override(s: &str) -> std::result::Result<Override, String> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(format!("invalid parameter key `{key}`"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(Override {
        key: key.to_string(),
        value,
    })
}

/// Parameters from a config file, plus the scenario it names, if any.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadedConfig {
    pub scenario: Option<String>,
    pub parameters: Map<String, Value>,
}

pub fn load(path: Option<&Path>, overrides: &[Override]) -> Result<LoadedConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            parse_config(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?
        }
        None => LoadedConfig::default(),
    };
    for o in overrides {
        set_dotted(&mut cfg.parameters, &o.key, o.value.clone())?;
    }
    Ok(cfg)
}

fn parse_config(text: &str) -> std::result::Result<LoadedConfig, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let Value::Object(mut obj) = value else {
        return Err("config must be a JSON object".into());
    };
    if !obj.contains_key("parameters") {
        return Ok(LoadedConfig {
            scenario: None,
            parameters: obj,
        });
    }
    let parameters = match obj.remove("parameters") {
        Some(Value::Object(p)) => p,
        _ => return Err("`parameters` must be an object".into()),
    };
    let scenario = match obj.remove("scenario") {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err("`scenario` must be a string".into()),
    };
    if let Some(k) = obj.keys().next() {
        return Err(format!("unknown top-level key `{k}`"));
    }
    Ok(LoadedConfig {
        scenario,
        parameters,
    })
}

fn set_dotted(map: &mut Map<String, Value>, key: &str, value: Value) -> Result<()> {
    match key.split_once('.') {
        None => {
            map.insert(key.to_string(), value);
            Ok(())
        }
        Some((head, rest)) => {
            let slot = map
                .entry(head.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            match slot {
                Value::Object(inner) => set_dotted(inner, rest, value),
                _ => Err(CliError::usage(format!(
                    "`{head}` is not an object; cannot set `{key}`"
                ))),
            }
        }
    }
}

/// Deserializes a parameter map into `P`, reporting problems as usage errors.
pub fn resolve<P: DeserializeOwned>(parameters: &Map<String, Value>) -> Result<P> {
    serde_json::from_value(Value::Object(parameters.clone()))
        .map_err(|e| CliError::usage(format!("parameters: {e}")))
}

/// The fully defaulted parameter set, echoed into reports.
pub fn echo<P: Serialize>(params: &P) -> Value {
    serde_json::to_value(params).unwrap_or(Value::Null)
}

//! Flat JSON configs with `key=value` overrides.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::CliError;

/// Reads the config file (if any) and applies overrides in order. Override
/// values are parsed as JSON when possible and kept as strings otherwise,
/// so `scheme=abm_p` and `x0=[1,2]` both work.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Map<String, Value>, CliError> {
    let mut map = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(CliError::Config(format!("config {} is not a JSON object", p.display()))),
                Err(e) => return Err(CliError::Config(format!("config {}: {e}", p.display()))),
            }
        }
        None => Map::new(),
    };
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{item}' is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        map.insert(key.trim().to_string(), value);
    }
    Ok(map)
}

/// Removes `key` from the map and decodes it.
pub fn take<T: DeserializeOwned>(map: &mut Map<String, Value>, key: &str) -> Result<Option<T>, CliError> {
    match map.remove(key) {
        None => Ok(None),
        Some(v) => serde_json::from_value(v)
            .map(Some)
            .map_err(|e| CliError::Config(format!("config key '{key}': {e}"))),
    }
}

/// Decodes the remaining keys; unknown keys are rejected by the target type.
pub fn finish<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config(format!("config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_json_or_fall_back_to_strings() {
        let m = load(None, &["steps=20".into(), "scheme=abm_p".into(), "x0=[1,2]".into()]).unwrap();
        assert_eq!(m["steps"], Value::from(20u64));
        assert_eq!(m["scheme"], Value::from("abm_p"));
        assert!(m["x0"].is_array());
        assert!(load(None, &["novalue".into()]).is_err());
    }
}

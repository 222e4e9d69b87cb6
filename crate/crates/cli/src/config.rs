use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Parsed `--config` file.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    tables: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let value: toml::Table =
            toml::from_str(&text).map_err(|e| CliError::config(format!("invalid config {}: {}", path.display(), e.message())))?;
        match serde_json::to_value(value) {
            Ok(Value::Object(tables)) => Ok(ConfigFile { tables }),
            _ => Err(CliError::config(format!("config {} is not a table", path.display()))),
        }
    }

    /// Overlay the flags given on the command line onto the `[section]`
    /// table. Unset flags (`None`, `false`) leave the file value in place.
    pub fn merge<T: Serialize + DeserializeOwned>(&self, section: &str, flags: &T) -> Result<T, CliError> {
        let mut merged = match self.tables.get(section) {
            None => Map::new(),
            Some(Value::Object(m)) => m.clone(),
            Some(_) => return Err(CliError::config(format!("config entry [{section}] must be a table"))),
        };
        let Value::Object(given) = serde_json::to_value(flags).map_err(|e| CliError::config(e.to_string()))? else {
            return Err(CliError::config("flags do not form a table"));
        };
        let unknown: Vec<String> =
            merged.keys().filter(|k| !given.contains_key(*k)).map(|k| format!("unknown key `{k}` in [{section}]")).collect();
        if !unknown.is_empty() {
            return Err(CliError::Config(unknown));
        }
        for (k, v) in given {
            if !matches!(v, Value::Null | Value::Bool(false)) {
                merged.insert(k, v);
            }
        }
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::config(format!("[{section}]: {e}")))
    }
}

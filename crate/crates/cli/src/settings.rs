//! Flat key=value configuration files. Lines are `key=value`; blank
//! lines and `#` comments are ignored. Command-line flags always win
//! over file values.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;
use sttcl::{Error, Result};

#[derive(Default)]
pub struct Settings {
    map: HashMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path)?;
        let mut map = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Format(format!(
                    "{}:{}: expected key=value, got \"{line}\"",
                    path.display(),
                    idx + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Settings { map })
    }

    /// Typed lookup; `None` when the key is absent.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("config key \"{key}\" has unparseable value \"{raw}\""))
            }),
        }
    }

    /// Flag value, then config value, then the built-in default.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(flag.or(self.get(key)?).unwrap_or(default))
    }

    /// Flag value or config value, no default.
    pub fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        Ok(flag.or(self.get(key)?))
    }
}

use std::path::Path;

use dpmpm::{Error, Result};
use serde::de::DeserializeOwned;

/// Loads a JSON config file, or the all-absent default when no path was
/// given. Field names match the long flag names; unknown keys are rejected
/// so typos fail loudly instead of silently using a default.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))
}

/// A required setting, from the flag if given, else the config file.
pub fn require<T>(flag: Option<T>, cfg: Option<T>, name: &str) -> Result<T> {
    flag.or(cfg)
        .ok_or_else(|| Error::Config(format!("--{name} is required (flag or config file)")))
}

/// An optional setting with the same flag-over-config priority.
pub fn pick<T>(flag: Option<T>, cfg: Option<T>) -> Option<T> {
    flag.or(cfg)
}

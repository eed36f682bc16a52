use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use tempsal_core::{Error, Result};

/// Overlays the flags that were given on top of the JSON config file (if any)
/// and deserializes the result back into the flag struct. Unknown keys in
/// the file are rejected by the target's `deny_unknown_fields`.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Result<T> {
    let mut base = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if !v.is_object() {
                return Err(Error::Config(format!("{}: expected a JSON object", path.display())));
            }
            v
        }
        None => Value::Object(Default::default()),
    };
    let overlay = serde_json::to_value(flags)?;
    let (Value::Object(base_map), Value::Object(flag_map)) = (&mut base, overlay) else {
        unreachable!("flag structs serialize to objects");
    };
    for (k, v) in flag_map {
        let empty_list = matches!(&v, Value::Array(a) if a.is_empty());
        if !v.is_null() && !empty_list {
            base_map.insert(k, v);
        }
    }
    serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))
}

/// Prints the resolved settings to stderr as one JSON line.
pub fn log_resolved(command: &str, resolved: &impl Serialize) {
    let json = serde_json::to_string(resolved).unwrap_or_else(|_| "{}".into());
    eprintln!("config {command}: {json}");
}

pub fn required<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing required setting '{name}'")))
}

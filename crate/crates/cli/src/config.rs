//! `--config` file support and the resolved-config echo.
//!
//! A config file is a JSON object whose keys are long flag names. Values
//! given on the command line win over the file. The echo written next to a
//! run's outputs has the same shape, so `--config <echo>` replays the run.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const ECHO_FILE: &str = "run_config.json";

/// Keys that never go into an echo because they do not influence outputs.
const NOT_ECHOED: [&str; 2] = ["config", "workers"];

fn to_object<T: Serialize>(v: &T) -> Map<String, Value> {
    match serde_json::to_value(v).expect("arguments serialize") {
        Value::Object(m) => m,
        _ => unreachable!("argument structs serialize to objects"),
    }
}

/// Overlay command-line values onto the config file (if any). Unset
/// options and `false` switches on the command line do not override.
pub fn merge<T: Serialize + DeserializeOwned>(
    cli: &T,
    config: Option<&Path>,
    command: &str,
) -> Result<T, CliError> {
    let mut merged = match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            let Value::Object(mut map) = value else {
                return Err(CliError::Usage(format!("config {} must be a JSON object", path.display())));
            };
            match map.remove("command") {
                Some(Value::String(c)) if c != command => {
                    return Err(CliError::Usage(format!(
                        "config {} is for `{c}`, not `{command}`",
                        path.display()
                    )))
                }
                _ => {}
            }
            map
        }
        None => Map::new(),
    };
    for (k, v) in to_object(cli) {
        if !(v.is_null() || v == Value::Bool(false)) {
            merged.insert(k, v);
        }
    }
    merged.remove("config");
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("bad configuration: {e}")))
}

/// Write `<dir>/run_config.json` for a fully resolved argument set.
pub fn write_echo<T: Serialize>(args: &T, command: &str, dir: &Path) -> anyhow::Result<()> {
    let mut map = to_object(args);
    map.retain(|k, v| !v.is_null() && !NOT_ECHOED.contains(&k.as_str()));
    map.insert("command".into(), Value::String(command.into()));
    bgmix_core::io::write_canonical_json(&Value::Object(map), dir.join(ECHO_FILE))?;
    Ok(())
}

pub fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

//! `--config FILE` support: each `key = value` entry of a flat TOML file
//! becomes a `--key=value` flag placed right after the subcommand, so flags given on
//! the command line take precedence.

use std::ffi::OsString;
use std::fs;

const SUBCOMMANDS: [&str; 5] = ["alpha", "profile", "defect", "amplify", "phi-check"];

/// Reads a flat TOML table. Keys may use `_` or `-`; arrays become
/// comma-separated values.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| format!("bad config: {}", e.message()))?;
    table
        .into_iter()
        .map(|(key, value)| {
            if key == "config" {
                return Err("config files cannot include other config files".to_string());
            }
            Ok((key.replace('_', "-"), flag_value(&key, value)?))
        })
        .collect()
}

fn flag_value(key: &str, value: toml::Value) -> Result<String, String> {
    Ok(match value {
        toml::Value::String(s) => s,
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .into_iter()
            .map(|v| flag_value(key, v))
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        other => return Err(format!("config key {key:?} has unsupported value {other}")),
    })
}

/// Removes `--config FILE` from `argv` and splices the file's flags in after
/// the subcommand name.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy().into_owned();
        if s == "--config" {
            path = Some(it.next().ok_or("--config needs a file")?.to_string_lossy().into_owned());
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let flags: Vec<OsString> = parse_config(&text)?
        .into_iter()
        .map(|(k, v)| OsString::from(format!("--{k}={v}")))
        .collect();
    let at = rest
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map(|i| i + 1)
        .ok_or("--config needs a subcommand")?;
    rest.splice(at..at, flags);
    Ok(rest)
}

//! Plain-text `key = value` configuration files.
//!
//! A file named by `--config` is spliced into the argument list ahead of the
//! command-line flags, so flags given explicitly win. A `manifest.json`
//! written by `pom simulate` is accepted too: its `config` object is used.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::CliError;

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::new(format!("line {}: expected key = value", lineno + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::new(format!("line {}: empty key", lineno + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::new(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let obj = value
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| CliError::new(format!("{} has no config object", path.display())))?;
        return Ok(obj
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.clone(), s)
            })
            .collect());
    }
    parse_key_values(&text)
}

/// Renders a map back to the text format.
pub fn render(map: &BTreeMap<String, String>) -> String {
    map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// Replaces `--config FILE` (after the subcommand) by the file's settings.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    if argv.len() < 3 {
        return Ok(argv);
    }
    let mut rest: Vec<OsString> = Vec::new();
    let mut path = None;
    let mut it = argv[2..].iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let p = it.next().ok_or_else(|| CliError::new("--config needs a file"))?;
            path = Some(p.clone());
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a.clone());
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let mut out = vec![argv[0].clone(), argv[1].clone()];
    for (k, v) in load(Path::new(&path))? {
        out.push(OsString::from(format!("--{k}")));
        out.push(OsString::from(v));
    }
    out.extend(rest);
    Ok(out)
}

//! Config files: `key = value` lines grouped under `[subcommand]` sections, or
//! the same structure as JSON. A run manifest is also accepted and replays the
//! resolved configuration it records.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Syntax { path: PathBuf, line: usize, message: String },
    #[error("{path}: invalid JSON config: {message}")]
    Json { path: PathBuf, message: String },
    #[error("unknown config key `{key}` for `{command}`")]
    UnknownKey { command: String, key: String },
    #[error("manifest was written by `{found}`, not `{command}`")]
    WrongCommand { command: String, found: String },
    #[error("key `{key}` must be true or false, got `{value}`")]
    NotBool { key: String, value: String },
}

/// Parsed config file. Keys before any section apply to every subcommand.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    pub path: PathBuf,
    pub global: Vec<(String, String)>,
    pub sections: BTreeMap<String, Vec<(String, String)>>,
    /// `(command, entries)` when the file is a run manifest.
    pub manifest: Option<(String, Vec<(String, String)>)>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => Some(items.iter().filter_map(scalar).collect::<Vec<_>>().join(",")),
        other => Some(other.to_string()),
    }
}

fn entries(obj: &serde_json::Map<String, Value>) -> Vec<(String, String)> {
    obj.iter().filter(|(_, v)| !v.is_object()).filter_map(|(k, v)| Some((normalize(k), scalar(v)?))).collect()
}

fn parse_json(path: &Path, text: &str) -> Result<ConfigFile, ConfigError> {
    let json_err = |message: String| ConfigError::Json { path: path.into(), message };
    let root: Value = serde_json::from_str(text).map_err(|e| json_err(e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| json_err("top level must be an object".into()))?;
    let mut cfg = ConfigFile { path: path.into(), ..Default::default() };
    if let (Some(Value::String(cmd)), Some(Value::Object(resolved))) = (obj.get("command"), obj.get("resolved")) {
        cfg.manifest = Some((cmd.clone(), entries(resolved)));
        return Ok(cfg);
    }
    cfg.global = entries(obj);
    for (k, v) in obj {
        if let Value::Object(section) = v {
            cfg.sections.insert(k.clone(), entries(section));
        }
    }
    Ok(cfg)
}

fn parse_text(path: &Path, text: &str) -> Result<ConfigFile, ConfigError> {
    let mut cfg = ConfigFile { path: path.into(), ..Default::default() };
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: &str| ConfigError::Syntax { path: path.into(), line: i + 1, message: message.into() };
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| syntax("unterminated section header"))?.trim();
            if name.is_empty() {
                return Err(syntax("empty section name"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`"))?;
        if k.trim().is_empty() {
            return Err(syntax("empty key"));
        }
        let v = v.trim().trim_matches('"').to_string();
        let entry = (normalize(k), v);
        match &section {
            Some(s) => cfg.sections.entry(s.clone()).or_default().push(entry),
            None => cfg.global.push(entry),
        }
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    if text.trim_start().starts_with('{') {
        parse_json(path, &text)
    } else {
        parse_text(path, &text)
    }
}

impl ConfigFile {
    /// Entries that apply to `command`, later ones taking precedence.
    pub fn entries_for(&self, command: &str) -> Result<Vec<(String, String)>, ConfigError> {
        if let Some((found, entries)) = &self.manifest {
            if found != command {
                return Err(ConfigError::WrongCommand { command: command.into(), found: found.clone() });
            }
            return Ok(entries.clone());
        }
        let mut out = self.global.clone();
        out.extend(self.sections.get(command).cloned().unwrap_or_default());
        Ok(out)
    }

    /// Turns the entries into command-line arguments. `flags` lists the
    /// boolean switches of the subcommand, `known` every long option.
    pub fn to_args(&self, command: &str, known: &[String], flags: &[String]) -> Result<Vec<String>, ConfigError> {
        let mut args = Vec::new();
        for (key, value) in self.entries_for(command)? {
            if !known.contains(&key) {
                return Err(ConfigError::UnknownKey { command: command.into(), key });
            }
            if flags.contains(&key) {
                match value.as_str() {
                    "true" => args.push(format!("--{key}")),
                    "false" => {}
                    _ => return Err(ConfigError::NotBool { key, value }),
                }
            } else {
                args.push(format!("--{key}={value}"));
            }
        }
        Ok(args)
    }
}

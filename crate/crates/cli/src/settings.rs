//! Key/value settings: the config file first, then flags on top.
//!
//! Config grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value
//! ```
//!
//! Keys are the long flag names; `-` and `_` are interchangeable. Blank
//! lines and lines starting with `#` are ignored, a key may appear once,
//! and a key the subcommand does not know is an error naming that key.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::ArgMatches;

use crate::CliError;

pub const SEED_ENV: &str = "HUBERBENCH_SEED";

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses config text into key/value pairs.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected `key = value`, found {line:?}",
                i + 1
            )));
        };
        let key = normalize(key);
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(out)
}

impl Settings {
    /// Merges the optional config file with the flags given on the command
    /// line. The keys `command` defines are the only ones accepted.
    pub fn from_matches(command: &clap::Command, matches: &ArgMatches) -> Result<Self, CliError> {
        let known: BTreeSet<String> = command
            .get_arguments()
            .map(|a| a.get_id().as_str().to_string())
            .filter(|id| id != "config" && id != "help")
            .collect();
        let mut values = BTreeMap::new();
        if let Some(path) = matches.get_one::<String>("config") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("{path}: {e}")))?;
            for (key, value) in parse_config(&text)? {
                if !known.contains(&key) {
                    return Err(CliError::Usage(format!("unknown config key `{key}` in {path}")));
                }
                values.insert(key, value);
            }
        }
        for id in matches.ids() {
            let key = id.as_str();
            if key == "config" || matches.value_source(key) != Some(ValueSource::CommandLine) {
                continue;
            }
            let Ok(Some(raw)) = matches.try_get_raw(key) else { continue };
            let joined: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            values.insert(key.to_string(), joined.join(","));
        }
        Ok(Self { values })
    }

    #[cfg(test)]
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Self {
            values: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("invalid value {v:?} for `{key}`: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required setting `{}`", key.replace('_', "-"))))
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        self.get_or(key, false)
    }

    /// Seed from the settings, then the environment, then 0.
    pub fn seed(&self) -> Result<u64, CliError> {
        if let Some(s) = self.get("seed")? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }
}

//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, keys use underscores. Flags
//! given on the command line replace values from the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

pub const GLOBAL_KEYS: [&str; 4] = ["seed", "out", "registry", "jobs"];

pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected key = value, got '{raw}'",
                i + 1
            )));
        };
        let k = k.trim().replace('-', "_");
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!(
                "config line {}: key '{k}' given twice",
                i + 1
            )));
        }
    }
    Ok(map)
}

/// Settings of one run after merging the config file with the flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    pub values: BTreeMap<String, String>,
    pub seed: u64,
    pub out: PathBuf,
    pub registry: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    /// `flags` holds every key the command accepts, with `None` where the flag
    /// was not given. Config keys outside this set and the global keys are rejected.
    pub fn build(
        command: &str,
        file: Option<&Path>,
        flags: Vec<(&'static str, Option<String>)>,
    ) -> Result<Self, CliError> {
        let mut values = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", p.display()))
                })?;
                parse_flat(&text)?
            }
            None => BTreeMap::new(),
        };
        for k in values.keys() {
            if !GLOBAL_KEYS.contains(&k.as_str()) && !flags.iter().any(|(f, _)| f == k) {
                return Err(CliError::Usage(format!(
                    "unknown config key '{k}' for command {command}"
                )));
            }
        }
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        let mut cfg = Self {
            command: command.to_string(),
            values,
            seed: 2024,
            out: PathBuf::from("."),
            registry: None,
            jobs: None,
        };
        cfg.seed = cfg.get_or("seed", 2024u64)?;
        cfg.out = PathBuf::from(cfg.get_or("out", ".".to_string())?);
        cfg.registry = cfg.get::<String>("registry")?.map(PathBuf::from);
        cfg.jobs = cfg.get::<usize>("jobs")?;
        Ok(cfg)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("invalid value '{s}' for {key}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required setting '{key}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blank_lines_and_dashes() {
        let m = parse_flat("# run\nm = 1.5\n\nquad-tol=1e-9  # tighter\n").unwrap();
        assert_eq!(m.get("m").unwrap(), "1.5");
        assert_eq!(m.get("quad_tol").unwrap(), "1e-9");
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        assert!(matches!(parse_flat("m 1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_flat("m=1\nm=2"), Err(CliError::Usage(_))));
    }
}

//! Result files and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Lib(polaron::Error::Io(format!("{}: {e}", path.display())))
}

/// Collects output files of one run and writes the manifest last.
pub struct Run<'a> {
    cfg: &'a RunConfig,
    files: Vec<String>,
}

impl<'a> Run<'a> {
    pub fn start(cfg: &'a RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cfg.out).map_err(|e| io(&cfg.out, e))?;
        Ok(Self {
            cfg,
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.cfg.out.join(name)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| io(&p, e))?;
        std::fs::write(&p, text + "\n").map_err(|e| io(&p, e))?;
        Ok(p)
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(&p).map_err(|e| io(&p, e))?;
        for r in rows {
            w.serialize(r).map_err(|e| io(&p, e))?;
        }
        w.flush().map_err(|e| io(&p, e))?;
        Ok(p)
    }

    /// Writes `<command>.manifest.json` with the merged settings, the seed,
    /// the registry hash and the tool version.
    pub fn finish(self, registry_hash: Option<String>, extra: Value) -> Result<(), CliError> {
        let cfg = self.cfg;
        let manifest = json!({
            "command": cfg.command,
            "inputs": cfg.values,
            "seed": cfg.seed,
            "registry_hash": registry_hash,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "created": chrono::Utc::now().to_rfc3339(),
            "outputs": self.files,
            "details": extra,
        });
        let p = cfg.out.join(format!("{}.manifest.json", cfg.command));
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| io(&p, e))?;
        std::fs::write(&p, text + "\n").map_err(|e| io(&p, e))
    }
}

pub fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Lib(polaron::Error::Io(e.to_string())))?;
    println!("{text}");
    Ok(())
}

//! Artifact writing. Every file carries the code version and the full run
//! config: CSVs as leading `#` lines, JSON as a `{version, config, result}`
//! envelope.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::args::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

pub struct OutDir<'a> {
    dir: &'a Path,
    config: &'a RunConfig,
    config_line: String,
}

impl<'a> OutDir<'a> {
    pub fn create(dir: &'a Path, config: &'a RunConfig) -> Result<Self, AppIoError> {
        fs::create_dir_all(dir).map_err(|e| AppIoError::new(dir, e))?;
        let config_line = serde_json::to_string(config).expect("run configs always serialize");
        Ok(Self {
            dir,
            config,
            config_line,
        })
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, AppIoError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| AppIoError::new(&path, e))?;
        Ok(path)
    }

    /// `body` starts with its header row.
    pub fn csv(&self, name: &str, body: &str) -> Result<PathBuf, AppIoError> {
        let text = format!("# blowlab {VERSION}\n# config: {}\n{body}", self.config_line);
        self.write(name, &text)
    }

    pub fn json<T: Serialize>(&self, name: &str, result: &T) -> Result<PathBuf, AppIoError> {
        let env = Envelope {
            version: VERSION,
            config: self.config,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env).expect("results always serialize");
        text.push('\n');
        self.write(name, &text)
    }
}

#[derive(Debug)]
pub struct AppIoError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

impl AppIoError {
    fn new(path: &Path, source: std::io::Error) -> Self {
        Self {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl std::fmt::Display for AppIoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "cannot write {}: {}", self.path.display(), self.source)
    }
}

/// CSV cell for an optional number; `{:e}` keeps full round-trip precision.
pub fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:e}"))
}

//! Deterministic table and manifest writers.

use crate::error::CliError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Shortest decimal form of `x` after rounding to 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let v = round12(x);
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn fmt_flag(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

/// JSON number rounded like the CSV columns; non-finite values become `null`.
pub fn json_num(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(round12(x))
    } else {
        serde_json::Value::Null
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub seed_hash: String,
    pub outputs: Vec<String>,
    pub wall_time: f64,
}

/// SHA-256 of the command name and resolved parameters.
pub fn input_digest(command: &str, params: &serde_json::Value) -> String {
    let doc = serde_json::json!({ "command": command, "params": params });
    let bytes = serde_json::to_vec(&doc).expect("json value serialises");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Files written into one output directory, in order.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        let set = Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        };
        std::fs::create_dir_all(dir).map_err(|e| set.io_error(dir, e))?;
        Ok(set)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn io_error(&self, path: &Path, e: impl std::fmt::Display) -> CliError {
        CliError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
            written: self.written.clone(),
        }
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.dir.join(name);
        let result = (|| -> Result<(), csv::Error> {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_path(&path)?;
            w.write_record(header)?;
            for row in rows {
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(())
        })();
        result.map_err(|e| self.io_error(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).expect("json value serialises");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| self.io_error(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(
        mut self,
        command: &str,
        params: serde_json::Value,
        wall_time: f64,
    ) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            seed_hash: input_digest(command, &params),
            params,
            outputs: self.written.clone(),
            wall_time,
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(manifest)
    }
}

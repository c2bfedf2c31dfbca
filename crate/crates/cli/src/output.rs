use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_DATA: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: EXIT_IO, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }
}

/// Record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub wall_clock_s: f64,
}

/// Collects output paths for one command run.
pub struct Writer {
    dir: PathBuf,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl Writer {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), outputs: Vec::new(), started: Instant::now() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes `<stem>.manifest.json` listing everything written so far.
    pub fn finish(
        mut self,
        stem: &str,
        command: &str,
        config: serde_json::Value,
        inputs: Vec<PathBuf>,
        seed: Option<u64>,
    ) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs,
            outputs: self.outputs.clone(),
            seed,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        };
        self.write_json(&format!("{stem}.manifest.json"), &manifest)
    }
}

pub fn read_text(path: &Path, code: u8) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError { code, message: format!("cannot read {}: {e}", path.display()) })
}

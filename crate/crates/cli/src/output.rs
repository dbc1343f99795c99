//! Output directories with a checksum manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use tat_core::field::io::{self, sha256_hex, FORMAT_VERSION};
use tat_core::field::GridSpec;

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const TIMINGS: &str = "timings.json";

pub struct Output {
    dir: PathBuf,
    command: String,
    inputs: BTreeMap<String, String>,
}

impl Output {
    /// Starts from an empty directory so stale files never reach the manifest.
    pub fn create(dir: PathBuf, command: &str) -> Result<Self, CliError> {
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, command: command.to_owned(), inputs: BTreeMap::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Records an input file's checksum in the manifest.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path)?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn input_bytes(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.insert(label.to_owned(), sha256_hex(bytes));
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Core(e.into()))?;
        fs::write(self.dir.join(name), text + "\n")?;
        Ok(())
    }

    pub fn text(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    pub fn field(&self, stem: &str, grid: &GridSpec, values: &[f64], kind: &str, extra: Value) -> Result<(), CliError> {
        io::write_field(&self.dir, stem, grid, values, kind, extra)?;
        Ok(())
    }

    pub fn raw(&self, stem: &str, grid: &GridSpec, values: &[f64], kind: &str, extra: Value) -> Result<(), CliError> {
        io::write_raw(&self.dir, stem, grid, values, kind, extra)?;
        Ok(())
    }

    /// Writes the manifest (inputs and every produced file with checksums)
    /// and, separately, the wall-clock timings.
    pub fn finish(self, config: &Value, seconds: f64) -> Result<(), CliError> {
        let mut outputs = BTreeMap::new();
        collect(&self.dir, &self.dir, &mut outputs)?;
        let manifest = json!({
            "format_version": FORMAT_VERSION,
            "command": self.command,
            "config": config,
            "inputs": self.inputs,
            "outputs": outputs,
        });
        self.json(MANIFEST, &manifest)?;
        self.json(TIMINGS, &json!({ "command": self.command, "seconds": seconds }))
    }
}

fn collect(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<(), CliError> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            collect(root, &path, out)?;
            continue;
        }
        let rel = path.strip_prefix(root).expect("walked from root").to_string_lossy().replace('\\', "/");
        if rel == MANIFEST || rel == TIMINGS {
            continue;
        }
        out.insert(rel, sha256_hex(&fs::read(&path)?));
    }
    Ok(())
}

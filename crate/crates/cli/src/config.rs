//! Experiment configuration: one JSON document plus `key=value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tat_core::coverage::CoverageOptions;
use tat_core::field::{io, BoundaryPatch, Bump, GridSpec, Phantom, Point, Region, Shape, SpeedField};
use tat_core::geodesic::{DistanceMode, LipschitzOptions};
use tat_core::wave::{BoundaryCondition, WaveOptions};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Every command writes into `<output>/<command>/`.
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub speed: SpeedConfig,
    pub region: Shape,
    #[serde(default)]
    pub patch: PatchConfig,
    #[serde(default)]
    pub phantom: PhantomConfig,
    #[serde(default)]
    pub distance: DistanceConfig,
    #[serde(default)]
    pub coverage: CoverageOptions,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub inversion: InversionConfig,
}

/// A square grid `[lower, upper]²` split into `cells` cells per side.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lower: f64,
    pub upper: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedConfig {
    Constant {
        value: f64,
    },
    Layered {
        below: f64,
        above: f64,
        interface: f64,
        width: f64,
    },
    Radial {
        center: Point,
        inside: f64,
        outside: f64,
        radius: f64,
        width: f64,
    },
    /// A field file, given as its path without extension.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    pub arcs: Vec<[f64; 2]>,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self { arcs: vec![[0.0, 1.0]] }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomConfig {
    pub bumps: Vec<Bump>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceConfig {
    /// Point sources; the detector samples are used when empty.
    pub sources: Vec<Point>,
    pub mode: DistanceMode,
    /// Also run the graph oracle and report the discrepancy.
    pub oracle: bool,
    /// Check an existing distance file (path without extension) instead of
    /// computing one.
    pub check: Option<PathBuf>,
    pub lipschitz: LipschitzOptions,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            sources: Vec::new(),
            mode: DistanceMode::FreeSpace,
            oracle: false,
            check: None,
            lipschitz: LipschitzOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub cfl_factor: f64,
    pub dt: Option<f64>,
    pub boundary: BoundaryCondition,
    pub snapshot_times: Vec<f64>,
    /// Observation time; `t_factor · tMin` when absent.
    pub t_max: Option<f64>,
    pub t_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let w = WaveOptions::default();
        Self {
            cfl_factor: w.cfl_factor,
            dt: w.dt,
            boundary: w.boundary,
            snapshot_times: Vec::new(),
            t_max: None,
            t_factor: 1.5,
        }
    }
}

impl SolverConfig {
    pub fn wave_options(&self) -> WaveOptions {
        WaveOptions {
            cfl_factor: self.cfl_factor,
            dt: self.dt,
            boundary: self.boundary,
            snapshot_times: self.snapshot_times.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationConfig {
    /// Apex of U; defaults to 0.05 outside the detector with the largest clearance.
    pub apex: Option<Point>,
    /// Height of U; defaults to `(1−δ)(clearance(apex) − 3h)`.
    pub height: Option<f64>,
    pub delta_shrink: f64,
    /// Space-time sets keep every `time_stride`-th solver level.
    pub time_stride: usize,
    /// Number of set slices written as field files.
    pub export_slices: usize,
    pub uc: UcConfig,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self { apex: None, height: None, delta_shrink: 0.05, time_stride: 8, export_slices: 8, uc: UcConfig::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UcConfig {
    pub center: Point,
    pub rho: f64,
    pub height: f64,
    /// Growth step; `height / 8` when absent.
    pub delta_inj: Option<f64>,
}

impl Default for UcConfig {
    fn default() -> Self {
        Self { center: [0.0, 0.0], rho: 0.2, height: 0.5, delta_inj: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionConfig {
    pub iterations: usize,
    pub step: StepRule,
    pub power_iterations: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self { iterations: 50, step: StepRule::BoundFraction { factor: 0.9 }, power_iterations: 10 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepRule {
    /// `factor / ‖Λ‖²` with the power-iteration estimate.
    BoundFraction {
        factor: f64,
    },
    Fixed {
        value: f64,
    },
}

/// Parsed config plus the raw bytes it came from (for the manifest).
pub struct Loaded {
    pub config: ExperimentConfig,
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    pub overrides: Vec<String>,
}

pub fn load(path: &Path, overrides: &[String]) -> Result<Loaded, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut value: Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for item in overrides {
        apply_override(&mut value, item)?;
    }
    let config: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let key = e.path().to_string();
        CliError::Config(format!("{}: at `{key}`: {}", path.display(), e.into_inner()))
    })?;
    Ok(Loaded { config, path: path.to_owned(), bytes, overrides: overrides.to_vec() })
}

/// `a.b.c=value`; the value is read as JSON, or as a string if that fails.
pub fn apply_override(root: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) =
        item.split_once('=').ok_or_else(|| CliError::Usage(format!("override `{item}` is not key=value")))?;
    if key.is_empty() {
        return Err(CliError::Usage(format!("override `{item}` has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(CliError::Config(format!("override `{key}`: `{}` is not an object", parts[..i].join("."))));
        };
        if i + 1 == parts.len() {
            map.insert((*part).to_owned(), value);
            return Ok(());
        }
        node = map.entry((*part).to_owned()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one part")
}

/// Geometry and data built from a config.
pub struct Setup {
    pub grid: GridSpec,
    pub speed: SpeedField,
    pub region: Region,
    pub patch: BoundaryPatch,
    pub phantom: Phantom,
}

impl ExperimentConfig {
    pub fn setup(&self) -> Result<Setup, CliError> {
        let cfg = |e: tat_core::Error| CliError::Config(e.to_string());
        let g = self.grid;
        let grid = GridSpec::square(g.lower, g.upper, g.cells).map_err(cfg)?;
        let speed = match &self.speed {
            SpeedConfig::Constant { value } => SpeedField::constant(grid, *value),
            SpeedConfig::Layered { below, above, interface, width } => {
                SpeedField::layered(grid, *below, *above, *interface, *width)
            }
            SpeedConfig::Radial { center, inside, outside, radius, width } => {
                SpeedField::radial(grid, *center, *inside, *outside, *radius, *width)
            }
            SpeedConfig::File { path } => {
                let (dir, stem) = split_stem(path)?;
                let (meta, values) = io::read_field(&dir, &stem).map_err(|e| CliError::Config(e.to_string()))?;
                if meta.grid.dims != grid.dims {
                    return Err(CliError::Config(format!("speed file {} is on a different grid", path.display())));
                }
                SpeedField::with_auto_bound(grid, values)
            }
        }
        .map_err(cfg)?;
        let region = Region::new(grid, self.region.clone()).map_err(cfg)?;
        let patch = BoundaryPatch::new(&region, &self.patch.arcs).map_err(cfg)?;
        let phantom = Phantom::from_bumps(&region, &self.phantom.bumps).map_err(cfg)?;
        Ok(Setup { grid, speed, region, patch, phantom })
    }
}

/// `dir/stem` → (`dir`, `stem`).
pub fn split_stem(path: &Path) -> Result<(PathBuf, String), CliError> {
    let stem = path
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::Config(format!("`{}` does not name a file", path.display())))?;
    let dir = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((dir, stem.to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_create_and_replace_keys() {
        let mut v = json!({"solver": {"cfl_factor": 0.9}});
        apply_override(&mut v, "solver.cfl_factor=0.5").unwrap();
        apply_override(&mut v, "inversion.iterations=25").unwrap();
        apply_override(&mut v, "name=run a").unwrap();
        assert_eq!(v, json!({"solver": {"cfl_factor": 0.5}, "inversion": {"iterations": 25}, "name": "run a"}));
        assert!(apply_override(&mut v, "name.inner=1").is_err());
        assert!(apply_override(&mut v, "novalue").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let v = json!({
            "name": "x", "output": "out",
            "grid": {"lower": -1.5, "upper": 1.5, "cells": 32},
            "speed": {"kind": "constant", "value": 1.0},
            "region": {"kind": "disk", "center": [0, 0], "radius": 1.0},
            "solver": {"cfl": 0.5}
        });
        let err = serde_path_to_error::deserialize::<_, ExperimentConfig>(v).unwrap_err();
        assert_eq!(err.path().to_string(), "solver.cfl");
    }
}

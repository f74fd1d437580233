//! Run configuration (TOML) and the JSON run manifest.
//!
//! The schema is the embedded [`DEFAULT_CONFIG`]; user files may set any
//! subset of its keys, unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{FsiError, Result};
use crate::generator::PhysicalParams;
use crate::grid::GeometryConfig;
use crate::output::sha256_hex;

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmbientSettings {
    pub amplitude: f64,
}

impl Default for AmbientSettings {
    fn default() -> Self {
        Self { amplitude: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub beta_max: f64,
    /// Nonnegative frequencies; negatives are added by symmetry.
    pub n_samples: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            beta_max: 50.0,
            n_samples: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSettings {
    pub count: usize,
    pub scan_beta_max: f64,
    pub scan_step: f64,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        Self {
            count: 10,
            scan_beta_max: 60.0,
            scan_step: 2.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSettings {
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub fit_window: f64,
    pub settle_time: f64,
    pub settle_dt: f64,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self {
            t_end: 25.0,
            dt: 0.01,
            seed: 1,
            fit_window: 0.5,
            settle_time: 1.0,
            settle_dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative stopping tolerance of the resolvent power iterations.
    pub power: f64,
    /// Allowed energy increase per step, relative to the initial energy.
    pub monotone: f64,
    pub complement_defect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            power: 1e-4,
            monotone: 1e-12,
            complement_defect: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { dir: "fsi-out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub physics: PhysicalParams,
    pub ambient: AmbientSettings,
    pub sweep: SweepSettings,
    pub spectrum: SpectrumSettings,
    pub evolution: EvolutionSettings,
    pub tolerances: Tolerances,
    pub output: OutputSettings,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(FsiError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Parses and validates; parse errors carry line and column.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| FsiError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FsiError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self =
            toml::from_str(&text).map_err(|e| FsiError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| FsiError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.physics.validate()?;
        if !self.ambient.amplitude.is_finite() {
            return Err(FsiError::Config("ambient amplitude must be finite".into()));
        }
        positive("sweep.beta_max", self.sweep.beta_max)?;
        if self.sweep.n_samples < 3 {
            return Err(FsiError::Config(format!(
                "sweep.n_samples must be at least 3, got {}",
                self.sweep.n_samples
            )));
        }
        if self.spectrum.count == 0 {
            return Err(FsiError::Config("spectrum.count must be positive".into()));
        }
        positive("spectrum.scan_beta_max", self.spectrum.scan_beta_max)?;
        positive("spectrum.scan_step", self.spectrum.scan_step)?;
        let ev = &self.evolution;
        positive("evolution.t_end", ev.t_end)?;
        positive("evolution.dt", ev.dt)?;
        positive("evolution.settle_dt", ev.settle_dt)?;
        if !(ev.fit_window > 0.0 && ev.fit_window <= 1.0) {
            return Err(FsiError::Config(format!(
                "evolution.fit_window must lie in (0, 1], got {}",
                ev.fit_window
            )));
        }
        if !(ev.settle_time.is_finite() && ev.settle_time >= 0.0) {
            return Err(FsiError::Config(format!(
                "evolution.settle_time must be nonnegative, got {}",
                ev.settle_time
            )));
        }
        positive("tolerances.power", self.tolerances.power)?;
        positive("tolerances.monotone", self.tolerances.monotone)?;
        positive("tolerances.complement_defect", self.tolerances.complement_defect)?;
        if self.output.dir.as_os_str().is_empty() {
            return Err(FsiError::Config("output.dir must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything a run produced. Only `seconds` depends on the machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub seconds: f64,
    pub success: bool,
    pub results: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            seconds: 0.0,
            success: true,
            results: BTreeMap::new(),
            notes: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn result(&mut self, key: impl Into<String>, v: f64) {
        self.results.insert(key.into(), v);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Serializes all writes into one output directory and keeps the checksum
/// inventory for the manifest.
pub struct ArtifactWriter {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)
            .map_err(|e| FsiError::Config(format!("output directory {} is not writable: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes)?;
        self.files.retain(|f| f.path != rel);
        self.files.push(FileEntry {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Writes `manifest.json` with the inventory of everything written so far.
    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.files = self.files;
        std::fs::write(self.root.join("manifest.json"), manifest.to_json()?)?;
        Ok(manifest)
    }
}

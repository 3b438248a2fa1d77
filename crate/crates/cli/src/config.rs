//! Run configuration: a TOML file sets defaults, command-line flags win.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use bstopo::fractal::{FeatureParams, Traversal};
use bstopo::ingest::{CityBounds, ColumnMap};
use bstopo::stats::{AlphaRule, Binning};
use bstopo::synth::{GenKind, Region};
use bstopo::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Default seed when a command does not pass --seed.
    pub seed: Option<u64>,
    /// Preset file location; defaults to the shipped table.
    pub presets: Option<PathBuf>,
    pub ingest: IngestConfig,
    pub features: FeatureParams,
    pub hurst: HurstConfig,
    pub eulerfit: EulerFitConfig,
    /// City bounding boxes selectable via --city.
    pub bounds: Vec<CityBounds>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    pub columns: ColumnMap,
    /// Dedup tolerance in meters; co-located records are one site.
    pub dedup_tol: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            columns: ColumnMap::default(),
            dedup_tol: 1.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HurstConfig {
    pub grid_k: usize,
    pub traversal: Traversal,
}

impl Default for HurstConfig {
    fn default() -> Self {
        HurstConfig {
            grid_k: 64,
            traversal: Traversal::Hilbert,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EulerFitConfig {
    /// Sliding window edge in meters.
    pub block: f64,
    /// Window stride in meters; defaults to the block size (tiling).
    pub stride: Option<f64>,
    pub alpha_rule: AlphaRule,
    pub binning: Binning,
}

impl Default for EulerFitConfig {
    fn default() -> Self {
        EulerFitConfig {
            block: 100.0,
            stride: None,
            alpha_rule: AlphaRule::default(),
            binning: Binning::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Format(format!("config {}: {e}", path.display())))?;
        for b in &cfg.bounds {
            b.validate()?;
        }
        Ok(cfg)
    }

    pub fn city(&self, name: &str) -> Result<&CityBounds> {
        self.bounds.iter().find(|b| b.name == name).ok_or_else(|| {
            Error::Format(format!("no bounds named '{name}' in the config"))
        })
    }
}

/// A generator preset: a GenKind plus an optional region.
#[derive(Debug, Clone, Deserialize)]
pub struct Preset {
    #[serde(flatten)]
    pub kind: GenKind,
    pub region: Option<Region>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetFile {
    pub version: u32,
    pub presets: BTreeMap<String, Preset>,
}

/// The preset table shipped with the binary; `--presets` swaps in a file.
pub const SHIPPED_PRESETS: &str = include_str!("../../../presets.toml");

pub fn load_presets(path: Option<&Path>) -> Result<PresetFile> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)?,
        None => SHIPPED_PRESETS.to_string(),
    };
    toml::from_str(&text).map_err(|e| Error::Format(format!("preset table: {e}")))
}

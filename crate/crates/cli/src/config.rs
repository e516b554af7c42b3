//! Pipeline configuration, read from a JSON file.

use std::path::{Path, PathBuf};

use reroute_core::model::ModelConfig;
use reroute_core::network::NetworkParams;
use reroute_core::synth::{SynthSpec, GTFS_DIR, POI_FILE, SMARTCARD_FILE};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub gtfs_dir: Option<PathBuf>,
    pub smartcard_csv: Option<PathBuf>,
    pub poi_geojson: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub network: NetworkParams,
    pub model: ModelConfig,
    /// Default intervention cutoff for `rank`, in percent.
    pub cutoff_pct: f64,
    /// When present, `synth` writes a generated city and missing input paths
    /// point at it.
    pub synth: Option<SynthSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            gtfs_dir: None,
            smartcard_csv: None,
            poi_geojson: None,
            output_dir: PathBuf::from("workspace"),
            seed: 42,
            network: NetworkParams::default(),
            model: ModelConfig::default(),
            cutoff_pct: 0.0,
            synth: None,
        }
    }
}

/// Resolved input locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inputs {
    pub gtfs_dir: PathBuf,
    pub smartcard_csv: PathBuf,
    pub poi_geojson: PathBuf,
}

pub const SYNTH_DIR: &str = "synth";

impl PipelineConfig {
    /// Load and make relative paths relative to the config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_relative(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for p in [&mut self.gtfs_dir, &mut self.smartcard_csv, &mut self.poi_geojson]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(0.0..=100.0).contains(&self.cutoff_pct) {
            return Err(PipelineError::Config(format!(
                "cutoff_pct {} is outside [0, 100]",
                self.cutoff_pct
            )));
        }
        if self.synth.is_none()
            && (self.gtfs_dir.is_none() || self.smartcard_csv.is_none() || self.poi_geojson.is_none())
        {
            return Err(PipelineError::Config(
                "gtfs_dir, smartcard_csv and poi_geojson are required without a synth section".into(),
            ));
        }
        Ok(())
    }

    /// Override the seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let Some(s) = &mut self.synth {
            s.seed = seed;
        }
    }

    pub fn synth_dir(&self) -> PathBuf {
        self.output_dir.join(SYNTH_DIR)
    }

    pub fn inputs(&self) -> Inputs {
        let synth = self.synth_dir();
        Inputs {
            gtfs_dir: self.gtfs_dir.clone().unwrap_or_else(|| synth.join(GTFS_DIR)),
            smartcard_csv: self.smartcard_csv.clone().unwrap_or_else(|| synth.join(SMARTCARD_FILE)),
            poi_geojson: self.poi_geojson.clone().unwrap_or_else(|| synth.join(POI_FILE)),
        }
    }
}

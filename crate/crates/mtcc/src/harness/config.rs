//! Run configuration: TOML-backed, schema-validated, defaults matching the
//! operational parameter tables. Every run writes its fully resolved config
//! next to its outputs so results are reproducible from the artifacts alone.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ddpg::Hyper;
use crate::env::EnvConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory of profile CSVs; when absent, synthetic profiles are used.
    pub profile_dir: Option<String>,
    /// Synthetic event count when no directory is given.
    pub synthetic_events: usize,
    /// Synthetic profile length in control intervals.
    pub synthetic_len: usize,
    /// Train fraction of the train/test split.
    pub split_ratio: f64,
    pub split_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            profile_dir: None,
            synthetic_events: 900,
            synthetic_len: 120,
            split_ratio: 8.0 / 9.0,
            split_seed: 9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Evaluate every this many training episodes.
    pub every: usize,
    /// Test episodes per evaluation point.
    pub episodes: usize,
    /// Discount applied to the evaluation return; training uses the learner
    /// discount regardless.
    pub gamma: f64,
    /// Greedy (noise-free) evaluation actions.
    pub greedy: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { every: 10, episodes: 10, gamma: 1.0, greedy: true }
    }
}

/// Top-level run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub variant: VariantName,
    pub train_episodes: TrainEpisodes,
    /// Test episodes for the final report.
    pub test_episodes: TestEpisodes,
    pub seed: Seed,
    pub data: DataConfig,
    pub eval: EvalConfig,
    pub env: EnvConfig,
    pub hyper: Hyper,
}

// Newtype defaults keep the TOML optional field-by-field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariantName(pub String);
impl Default for VariantName {
    fn default() -> Self {
        Self("mtcc-pc".into())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrainEpisodes(pub usize);
impl Default for TrainEpisodes {
    fn default() -> Self {
        Self(1000)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TestEpisodes(pub usize);
impl Default for TestEpisodes {
    fn default() -> Self {
        Self(100)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);
impl Default for Seed {
    fn default() -> Self {
        Self(1)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        crate::ddpg::Variant::parse(&self.variant.0)?;
        self.env.validate()?;
        if self.train_episodes.0 == 0 || self.test_episodes.0 == 0 {
            return Err(Error::InvalidConfig("episode counts must be positive".into()));
        }
        if self.eval.every == 0 || self.eval.episodes == 0 {
            return Err(Error::InvalidConfig("eval cadence must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.data.split_ratio) {
            return Err(Error::InvalidConfig("split ratio must sit in [0, 1]".into()));
        }
        if self.data.synthetic_len < self.env.k_max {
            return Err(Error::InvalidConfig(format!(
                "synthetic profile length {} shorter than episode length {}",
                self.data.synthetic_len, self.env.k_max
            )));
        }
        Ok(())
    }

    /// Serializes the fully resolved config next to a run's outputs.
    pub fn write_resolved(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        std::fs::write(dir.join("resolved_config.toml"), text)?;
        Ok(())
    }
}

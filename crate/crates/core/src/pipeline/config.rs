use std::path::Path;

use serde::{Deserialize, Serialize};

use super::benchmark::BenchmarkConfig;
use super::features::FeatureConfig;
use crate::attention::EdaConfig;
use crate::distillation::KdConfig;
use crate::framing::BinningConfig;
use crate::localization::LocalizeConfig;
use crate::sampling::EdsConfig;
use crate::simulator::SimConfig;
use crate::trainer::{FrameSampler, Optimizer, TrainConfig};
use crate::{Error, Result};

/// File name of the resolved configuration written into every run
/// directory.
pub const RUN_CONFIG: &str = "config.toml";

/// Training settings that are not owned by another section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub topk_fraction: f64,
    pub sampler: FrameSampler,
    pub class_weight: f64,
    pub optimizer: Optimizer,
    /// Put distance-decay attention in front of the heads.
    pub use_eda: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
            topk_fraction: t.topk_fraction,
            sampler: t.sampler,
            class_weight: t.class_weight,
            optimizer: t.optimizer,
            use_eda: true,
        }
    }
}

/// Every stage's settings. Missing keys take the module defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub simulator: SimConfig,
    pub binning: BinningConfig,
    /// Densities from raw window counts rather than rendered counts.
    pub density_from_raw: bool,
    pub sampling: EdsConfig,
    pub attention: EdaConfig,
    pub distillation: KdConfig,
    pub train: TrainSection,
    pub features: FeatureConfig,
    pub localize: LocalizeConfig,
    pub benchmark: BenchmarkConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            simulator: SimConfig::default(),
            binning: BinningConfig::default(),
            density_from_raw: true,
            sampling: EdsConfig::default(),
            attention: EdaConfig::default(),
            distillation: KdConfig::default(),
            train: TrainSection::default(),
            features: FeatureConfig::default(),
            localize: LocalizeConfig::default(),
            benchmark: BenchmarkConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: PipelineConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("pipeline config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.simulator.validate()?;
        self.binning.validate()?;
        self.sampling.validate()?;
        self.attention.validate()?;
        self.localize.validate()?;
        self.train_config().validate()
    }

    /// Assembled trainer settings; the pipeline seed drives the samplers.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.train.learning_rate,
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            topk_fraction: self.train.topk_fraction,
            kd: self.distillation.clone(),
            seed: self.seed,
            sampler: self.train.sampler,
            eds: self.sampling.clone(),
            class_weight: self.train.class_weight,
            optimizer: self.train.optimizer,
        }
    }

    /// Writes the resolved configuration into `dir`.
    pub fn write_into(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(RUN_CONFIG), self.to_toml_string())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_modules() {
        let c = PipelineConfig::default();
        assert_eq!(c.binning, BinningConfig::default());
        assert_eq!(c.sampling, EdsConfig::default());
        assert_eq!(c.attention, EdaConfig::default());
        assert_eq!(c.distillation, KdConfig::default());
        assert_eq!(c.localize, LocalizeConfig::default());
        let t = c.train_config();
        assert_eq!(t.learning_rate, 2e-5);
        assert_eq!(t.epochs, 10);
        assert_eq!(t.batch_size, 128);
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
        let partial = PipelineConfig::from_toml_str("seed = 3\n[binning]\nstride_frames = 8\n").unwrap();
        assert_eq!(partial.seed, 3);
        assert_eq!(partial.binning.stride_frames, 8);
        assert_eq!(partial.binning.half_window_frames, 8);
        assert!(PipelineConfig::from_toml_str("bogus = 1").is_err());
        assert!(PipelineConfig::from_toml_str("[sampling]\ntau = 1.5").is_err());
    }
}

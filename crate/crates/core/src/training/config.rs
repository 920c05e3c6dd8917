use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::models::{RotationMode, UnifiedVariant};
use crate::tensor_nn::{Activation, AdamConfig, FourierFeatureConfig, NetworkConfig};
use crate::{Error, Result};

/// Per-epoch learning rate applied on top of `adam.lr`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine from `lr` at the first epoch down to `final_fraction * lr`
    /// at the last.
    Cosine { final_fraction: f64 },
}

impl LrSchedule {
    pub fn lr(self, base: f64, epoch: usize, epochs: usize) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::Cosine { final_fraction } => {
                let u = if epochs <= 1 { 0.0 } else { (epoch - 1) as f64 / (epochs - 1) as f64 };
                base * (final_fraction + (1.0 - final_fraction) * 0.5 * (1.0 + (std::f64::consts::PI * u).cos()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// End-to-end: both networks trained jointly from scratch.
    D,
    /// RigidNet pretrained, then both networks trained jointly.
    E,
    /// Frozen anchor: RigidNet trained, frozen, then DeformationNet trained.
    F,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" | "d" => Ok(Strategy::D),
            "E" | "e" => Ok(Strategy::E),
            "F" | "f" => Ok(Strategy::F),
            _ => Err(Error::Config(format!("unknown strategy {s:?} (expected D, E or F)"))),
        }
    }
}

/// Temporal Fourier encoding applied to the time input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSpec {
    pub mapping_size: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub depth: usize,
    pub hidden: usize,
    pub activation: Activation,
    #[serde(default)]
    pub fourier: Option<FourierSpec>,
    /// DeepONet latent dimension `p`; unused by plain MLPs.
    #[serde(default = "default_latent")]
    pub latent: usize,
}

fn default_latent() -> usize {
    128
}

impl ArchConfig {
    pub fn new(depth: usize, hidden: usize) -> Self {
        Self { depth, hidden, activation: Activation::Silu, fourier: None, latent: default_latent() }
    }

    pub fn with_activation(mut self, a: Activation) -> Self {
        self.activation = a;
        self
    }

    pub fn with_fourier(mut self, f: Option<FourierSpec>) -> Self {
        self.fourier = f;
        self
    }

    /// Network config for `input -> output` with the time input at `time_column`.
    pub fn network(&self, input: usize, output: usize, time_column: usize, seed: u64, fourier_seed: u64) -> NetworkConfig {
        let fourier = self.fourier.map(|f| FourierFeatureConfig {
            mapping_size: f.mapping_size,
            sigma: f.sigma,
            sample_seed: fourier_seed,
            column: time_column,
        });
        NetworkConfig::new(self.depth, self.hidden, input, output)
            .with_activation(self.activation)
            .with_seed(seed)
            .with_fourier(fourier)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// RigidNet epochs before the deformation stage of strategy F.
    pub stage1_epochs: usize,
    /// RigidNet pretraining epochs of strategy E.
    pub pretrain_epochs: usize,
    pub strategy: Strategy,
    /// Fraction of training (scenario, time, node) triples used.
    pub ratio: f64,
    /// Fraction of validation triples scored each epoch.
    pub val_ratio: f64,
    pub batch_size: usize,
    /// Mini-batch size for RigidNet supervised on (scenario, time) pairs.
    pub rigid_batch_size: usize,
    pub seed: u64,
    /// Seed of the frozen Fourier frequencies. Kept apart from `seed` so
    /// that models trained from different seeds share one encoding and
    /// their parameters can be interpolated.
    pub fourier_seed: u64,
    pub adam: AdamConfig,
    #[serde(default)]
    pub lr_schedule: LrSchedule,
    pub rotation_mode: RotationMode,
    pub rigid: ArchConfig,
    pub deform: ArchConfig,
    pub unified: ArchConfig,
    pub unified_variant: UnifiedVariant,
    pub oracle: ArchConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            stage1_epochs: 200,
            pretrain_epochs: 100,
            strategy: Strategy::F,
            ratio: 0.10,
            val_ratio: 1.0,
            batch_size: 4096,
            rigid_batch_size: 25,
            seed: 0,
            fourier_seed: 0,
            adam: AdamConfig::default(),
            lr_schedule: LrSchedule::Constant,
            rotation_mode: RotationMode::Incremental,
            rigid: ArchConfig::new(3, 256),
            deform: ArchConfig::new(6, 256),
            unified: ArchConfig::new(8, 256).with_fourier(Some(FourierSpec { mapping_size: 8, sigma: 10.0 })),
            unified_variant: UnifiedVariant::CoupledMlp,
            oracle: ArchConfig::new(8, 256),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(Error::Config(format!("ratio must lie in (0, 1], got {}", self.ratio)));
        }
        if !(self.val_ratio > 0.0 && self.val_ratio <= 1.0) {
            return Err(Error::Config(format!("val_ratio must lie in (0, 1], got {}", self.val_ratio)));
        }
        if self.batch_size == 0 || self.rigid_batch_size == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn seed_for(&self, stream: u64) -> u64 {
        derive_seed(self.seed, stream)
    }
}

/// Independent seed for a named stream (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) mod streams {
    pub const RIGID_INIT: u64 = 1;
    pub const DEFORM_INIT: u64 = 2;
    pub const SUBSAMPLE: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const UNIFIED_INIT: u64 = 5;
    pub const TRUNK_INIT: u64 = 6;
    pub const ORACLE_INIT: u64 = 7;
    pub const RIGID_SHUFFLE: u64 = 8;
    /// Shared by every model so validation scores are comparable.
    pub const VALIDATION: u64 = 0x7A11;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_schedule_endpoints() {
        let s = LrSchedule::Cosine { final_fraction: 0.01 };
        assert_eq!(s.lr(1e-3, 1, 200), 1e-3);
        assert!((s.lr(1e-3, 200, 200) - 1e-5).abs() < 1e-18);
        assert!((s.lr(1e-3, 101, 201) - 0.505e-3).abs() < 1e-15);
        assert_eq!(s.lr(1e-3, 1, 1), 1e-3);
        assert_eq!(LrSchedule::Constant.lr(2e-3, 7, 10), 2e-3);
    }

    #[test]
    fn config_without_schedule_deserializes_constant() {
        let mut v = serde_json::to_value(TrainConfig::default()).unwrap();
        v.as_object_mut().unwrap().remove("lr_schedule");
        let c: TrainConfig = serde_json::from_value(v).unwrap();
        assert_eq!(c.lr_schedule, LrSchedule::Constant);
        let cos: LrSchedule = serde_json::from_str(r#"{"cosine": {"final_fraction": 0.1}}"#).unwrap();
        assert_eq!(cos, LrSchedule::Cosine { final_fraction: 0.1 });
    }
}

//! Gaussian Fourier feature encoding of a single scalar input.
//!
//! `gamma(t) = [cos(2 pi B t), sin(2 pi B t)]` with `B` an `M`-vector drawn
//! once from `N(0, sigma^2)`. The layout is all cosines first, then all
//! sines; checkpoints depend on this order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierFeatureConfig {
    /// Number of frequencies `M`; the encoding has width `2M`.
    pub mapping_size: usize,
    /// Standard deviation `sigma` of the frequency distribution.
    pub sigma: f64,
    pub sample_seed: u64,
    /// Index of the raw input column that is replaced by its encoding.
    pub column: usize,
}

/// Frozen frequency vector. Never part of the trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFeatures {
    config: FourierFeatureConfig,
    frequencies: Vec<f64>,
}

impl FourierFeatures {
    pub fn new(config: FourierFeatureConfig) -> Result<Self> {
        if config.mapping_size == 0 {
            return Err(Error::Config("Fourier mapping size must be >= 1".into()));
        }
        if !(config.sigma > 0.0 && config.sigma.is_finite()) {
            return Err(Error::Config(format!("Fourier sigma must be positive, got {}", config.sigma)));
        }
        let normal = Normal::new(0.0, config.sigma)
            .map_err(|e| Error::Config(format!("Fourier sigma: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.sample_seed);
        let frequencies = (0..config.mapping_size).map(|_| normal.sample(&mut rng)).collect();
        Ok(Self { config, frequencies })
    }

    /// Builds an encoder with explicit frequencies (tests and analysis).
    pub fn with_frequencies(config: FourierFeatureConfig, frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.len() != config.mapping_size || frequencies.is_empty() {
            return Err(Error::Shape(format!(
                "expected {} Fourier frequencies, got {}",
                config.mapping_size,
                frequencies.len()
            )));
        }
        Ok(Self { config, frequencies })
    }

    pub fn config(&self) -> &FourierFeatureConfig {
        &self.config
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn width(&self) -> usize {
        2 * self.frequencies.len()
    }

    pub fn encode_into(&self, t: f64, out: &mut [f64]) {
        let m = self.frequencies.len();
        for (j, &b) in self.frequencies.iter().enumerate() {
            let phase = std::f64::consts::TAU * b * t;
            out[j] = phase.cos();
            out[m + j] = phase.sin();
        }
    }

    /// Bit-level checksum of the frequency vector.
    pub fn checksum(&self) -> u64 {
        super::checksum_f64(&self.frequencies)
    }
}

/// Encodes a scalar time value as `[cos(2 pi B t)..., sin(2 pi B t)...]`.
pub fn fourier_encode(t: f64, features: &FourierFeatures) -> Vec<f64> {
    let mut out = vec![0.0; features.width()];
    features.encode_into(t, &mut out);
    out
}

//! Minimal dense-network engine: He-initialized MLPs, exact reverse-mode
//! gradients, Adam, Gaussian Fourier features and a binary checkpoint format.
//!
//! Everything is `f64`. Networks are plain values; only [`adam_step`]
//! mutates parameters during training.

mod activation;
mod adam;
mod checkpoint;
mod fourier;
mod matrix;
mod network;

pub use activation::Activation;
pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    checkpoint_bytes, parse_checkpoint, read_checkpoint, write_checkpoint, CheckpointHeader,
    CHECKPOINT_FORMAT_VERSION,
};
pub use fourier::{fourier_encode, FourierFeatureConfig, FourierFeatures};
pub use matrix::Matrix;
pub use network::{
    flatten_params, mlp_init, unflatten_params, ForwardPass, Gradients, LayerSpan, Network,
    NetworkConfig,
};

/// FNV-1a over the bit patterns of a float slice.
pub fn checksum_f64(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

//! Rigid-deformation decomposition for spatio-temporal prediction of crash
//! node trajectories.
//!
//! The total motion of every node is split into a global rigid transform
//! (rotation about the initial centroid plus translation) and a per-node
//! residual deformation field:
//!
//! ```text
//! x_i(t, eta) = R(t, eta) (x_init_i - c) + c + T(t, eta) + D_i(x_init_i, t, eta)
//! ```
//!
//! A small network (`RigidNet`) predicts the rigid part from `(t, eta)` and a
//! deeper one (`DeformationNet`) predicts the residual from
//! `(x_init, t, eta)`. Modules:
//!
//! - [`tensor_nn`]: dense networks, exact gradients, Adam, Fourier features.
//! - [`kinematics`]: quaternions, Kabsch alignment, label extraction.
//! - [`data`]: scenario sampling, the synthetic trajectory generator, I/O.
//! - [`models`]: prediction heads and total-field reconstruction.
//! - [`training`]: losses, training strategies, hyperparameter sweeps.
//! - [`evaluation`]: RMSE, directional consistency, IoU, phases, STFT.
//! - [`landscape`]: loss-surface planes and seed interpolation.

pub(crate) mod blob;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod kinematics;
pub mod landscape;
pub mod models;
pub mod tensor_nn;
pub mod training;

pub use error::{Error, Result};

/// Three-vector in meters (or m/s where noted).
pub type Vec3 = [f64; 3];

/// Row-major 3x3 matrix.
pub type Mat3 = [[f64; 3]; 3];

//! Prediction heads and total-field reconstruction.
//!
//! - [`RigidNetModel`]: `(t, eta)` to a per-step rigid transform, in Euler,
//!   absolute quaternion or incremental quaternion form.
//! - [`DeformationNetModel`]: `(x_init, t, eta)` to the residual field.
//! - [`UnifiedModel`]: the coupled MLP and DeepONet baselines that predict
//!   absolute positions directly.
//! - [`OracleModel`]: one component learned, the other taken from labels.

mod deformnet;
mod normalize;
mod oracle;
mod reconstruct;
mod rigidnet;
mod unified;

pub use deformnet::{deformnet_predict, DeformationNetModel};
pub(crate) use deformnet::scale_rows;
pub use normalize::{InputNormalizer, OutputScaling};
pub use oracle::{label_rigid_positions, oracle_deformation_reconstruct, oracle_rigid_reconstruct, OracleKind, OracleModel};
pub use reconstruct::{reconstruct_total, rigid_positions, ProposedModel, ProposedPrediction};
pub use rigidnet::{decode_rotation, rigidnet_rollout, RigidNetModel, RotationMode};
pub use unified::{unified_predict, DeepOnet, UnifiedBackbone, UnifiedModel, UnifiedVariant};

use crate::tensor_nn::{Matrix, Network};
use crate::Result;

/// Rows per forward chunk when evaluating large node-time sets.
pub(crate) const CHUNK_ROWS: usize = 4096;

/// Forward pass over `n` rows built by `fill`, in bounded-memory chunks.
pub(crate) fn forward_rows(net: &Network, n: usize, fill: impl Fn(usize, &mut [f64])) -> Result<Matrix> {
    let width = net.config().input_dim;
    let out_w = net.config().output_dim;
    let mut out = Matrix::zeros(n, out_w);
    let mut start = 0;
    while start < n {
        let rows = CHUNK_ROWS.min(n - start);
        let mut batch = Matrix::zeros(rows, width);
        for r in 0..rows {
            fill(start + r, batch.row_mut(r));
        }
        let y = net.forward(&batch)?;
        out.as_mut_slice()[start * out_w..(start + rows) * out_w].copy_from_slice(y.as_slice());
        start += rows;
    }
    Ok(out)
}

/// Model-kind metadata stored alongside network parameters in checkpoints.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Envelope {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_mode: Option<RotationMode>,
    pub input: InputNormalizer,
    pub output: OutputScaling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

pub(crate) fn read_envelope(path: &std::path::Path) -> Result<(Network, Envelope)> {
    let (net, env) = crate::tensor_nn::read_checkpoint(path)?;
    let env = env.ok_or_else(|| crate::Error::format(path, "checkpoint has no model envelope"))?;
    let env: Envelope = serde_json::from_value(env).map_err(|e| crate::Error::format(path, e.to_string()))?;
    Ok((net, env))
}

pub(crate) fn write_envelope(path: &std::path::Path, net: &Network, env: &Envelope) -> Result<()> {
    crate::tensor_nn::write_checkpoint(path, net, Some(serde_json::to_value(env)?))
}

use std::path::Path;

use super::deformnet::scale_rows;
use super::reconstruct::rigid_positions;
use super::{forward_rows, read_envelope, reconstruct_total, write_envelope, Envelope, InputNormalizer, OutputScaling};
use crate::data::TimeGrid;
use crate::kinematics::DecompositionLabels;
use crate::tensor_nn::{mlp_init, Network, NetworkConfig};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OracleKind {
    /// Learns the residual; the rigid part comes from labels.
    #[serde(rename = "oracle-deform")]
    Deformation,
    /// Learns rigid-mapped node positions; the residual comes from labels.
    #[serde(rename = "oracle-rigid")]
    Rigid,
}

impl OracleKind {
    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Deformation => "oracle-deform",
            OracleKind::Rigid => "oracle-rigid",
        }
    }
}

/// Per-node network `(x_init, t, eta) -> 3` used by both oracle baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleModel {
    pub kind: OracleKind,
    pub net: Network,
    pub input: InputNormalizer,
    pub output: OutputScaling,
}

impl OracleModel {
    pub fn default_config() -> NetworkConfig {
        NetworkConfig::new(8, 256, 8, 3)
    }

    pub fn new(kind: OracleKind, config: NetworkConfig, input: InputNormalizer) -> Result<Self> {
        if config.input_dim != 8 || config.output_dim != 3 {
            return Err(Error::Config("oracle network maps 8 inputs to 3 outputs".into()));
        }
        Ok(Self { kind, net: mlp_init(config)?, input, output: OutputScaling::identity(3) })
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    pub(crate) fn predict_rows(&self, n: usize, fill: impl Fn(usize, &mut [f64])) -> Result<Vec<Vec3>> {
        Ok(scale_rows(&self.output, &forward_rows(&self.net, n, fill)?))
    }

    pub fn predict_trajectory(&self, x_init: &[Vec3], eta: [f64; 4], grid: &TimeGrid) -> Result<Vec<Vec3>> {
        let n = x_init.len();
        self.predict_rows(n * grid.n_steps, |r, row| self.input.node_row(x_init[r % n], grid.time(r / n), eta, row))
    }

    /// Total-field prediction using the complementary component from `labels`.
    pub fn reconstruct(&self, x_init: &[Vec3], eta: [f64; 4], grid: &TimeGrid, labels: &DecompositionLabels) -> Result<Vec<Vec3>> {
        let y = self.predict_trajectory(x_init, eta, grid)?;
        match self.kind {
            OracleKind::Deformation => oracle_deformation_reconstruct(x_init, labels, &y),
            OracleKind::Rigid => oracle_rigid_reconstruct(&y, labels),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let env = Envelope { kind: self.kind.name().into(), rotation_mode: None, input: self.input.clone(), output: self.output.clone(), extra: None };
        write_envelope(path, &self.net, &env)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (net, env) = read_envelope(path)?;
        let kind = match env.kind.as_str() {
            "oracle-deform" => OracleKind::Deformation,
            "oracle-rigid" => OracleKind::Rigid,
            other => return Err(Error::format(path, format!("expected an oracle checkpoint, found {other:?}"))),
        };
        Ok(Self { kind, net, input: env.input, output: env.output })
    }
}

/// Ground-truth rigid motion plus a predicted residual.
pub fn oracle_deformation_reconstruct(x_init: &[Vec3], labels: &DecompositionLabels, d_hat: &[Vec3]) -> Result<Vec<Vec3>> {
    if labels.n_nodes != x_init.len() {
        return Err(Error::Missing(format!("labels cover {} nodes, trajectory has {}", labels.n_nodes, x_init.len())));
    }
    reconstruct_total(x_init, labels.centroid, &labels.rigid_series(), d_hat)
}

/// Predicted rigid-mapped positions plus the ground-truth residual.
pub fn oracle_rigid_reconstruct(r_hat: &[Vec3], labels: &DecompositionLabels) -> Result<Vec<Vec3>> {
    if r_hat.len() != labels.residuals.len() {
        return Err(Error::Shape(format!("{} rigid positions for {} residuals", r_hat.len(), labels.residuals.len())));
    }
    Ok(r_hat.iter().zip(&labels.residuals).map(|(p, d)| [p[0] + d[0], p[1] + d[1], p[2] + d[2]]).collect())
}

/// Label rigid-mapped positions, the target of the rigid oracle.
pub fn label_rigid_positions(x_init: &[Vec3], labels: &DecompositionLabels) -> Vec<Vec3> {
    rigid_positions(x_init, labels.centroid, &labels.rigid_series())
}

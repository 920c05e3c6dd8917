use std::path::Path;

use super::{forward_rows, read_envelope, write_envelope, Envelope, InputNormalizer, OutputScaling};
use crate::data::TimeGrid;
use crate::tensor_nn::{mlp_init, Matrix, Network, NetworkConfig};
use crate::{Error, Result, Vec3};

/// Per-node residual field `D(x_init, t, eta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationNetModel {
    pub net: Network,
    pub input: InputNormalizer,
    pub output: OutputScaling,
}

impl DeformationNetModel {
    pub const DEPTH: usize = 6;
    pub const HIDDEN: usize = 256;
    /// Column of the time input in `[x, t, eta]` rows.
    pub const TIME_COLUMN: usize = 3;

    pub fn default_config() -> NetworkConfig {
        NetworkConfig::new(Self::DEPTH, Self::HIDDEN, 8, 3)
    }

    pub fn new(config: NetworkConfig, input: InputNormalizer) -> Result<Self> {
        if config.input_dim != 8 || config.output_dim != 3 {
            return Err(Error::Config(format!(
                "DeformationNet maps 8 inputs to 3 outputs, got {} -> {}",
                config.input_dim, config.output_dim
            )));
        }
        Ok(Self { net: mlp_init(config)?, input, output: OutputScaling::identity(3) })
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    /// Scaled outputs for `n` rows of `[x, t, eta]` built by `fill`.
    pub(crate) fn predict_rows(&self, n: usize, fill: impl Fn(usize, &mut [f64])) -> Result<Vec<Vec3>> {
        let raw = forward_rows(&self.net, n, fill)?;
        Ok(scale_rows(&self.output, &raw))
    }

    /// Residual at every node and step, time-major.
    pub fn predict_trajectory(&self, x_init: &[Vec3], eta: [f64; 4], grid: &TimeGrid) -> Result<Vec<Vec3>> {
        let n = x_init.len();
        self.predict_rows(n * grid.n_steps, |r, row| {
            self.input.node_row(x_init[r % n], grid.time(r / n), eta, row)
        })
    }

    pub fn envelope(&self) -> Envelope {
        Envelope { kind: "deformationnet".into(), rotation_mode: None, input: self.input.clone(), output: self.output.clone(), extra: None }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_envelope(path, &self.net, &self.envelope())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (net, env) = read_envelope(path)?;
        if env.kind != "deformationnet" {
            return Err(Error::format(path, format!("expected a deformationnet checkpoint, found {:?}", env.kind)));
        }
        Ok(Self { net, input: env.input, output: env.output })
    }
}

pub(crate) fn scale_rows(scaling: &OutputScaling, raw: &Matrix) -> Vec<Vec3> {
    (0..raw.rows())
        .map(|r| {
            let mut v = [0.0; 3];
            scaling.apply(raw.row(r), &mut v);
            v
        })
        .collect()
}

/// Residual prediction for a batch of nodes at one time.
pub fn deformnet_predict(model: &DeformationNetModel, x_init: &[Vec3], t: f64, eta: [f64; 4]) -> Result<Vec<Vec3>> {
    model.predict_rows(x_init.len(), |r, row| model.input.node_row(x_init[r], t, eta, row))
}

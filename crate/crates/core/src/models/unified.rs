use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::deformnet::scale_rows;
use super::{forward_rows, read_envelope, write_envelope, Envelope, InputNormalizer, OutputScaling, CHUNK_ROWS};
use crate::data::TimeGrid;
use crate::tensor_nn::{mlp_init, ForwardPass, Gradients, Matrix, Network, NetworkConfig};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnifiedVariant {
    #[serde(rename = "coupled-mlp")]
    CoupledMlp,
    #[serde(rename = "deeponet")]
    DeepOnet,
}

impl UnifiedVariant {
    pub fn name(self) -> &'static str {
        match self {
            UnifiedVariant::CoupledMlp => "coupled-mlp",
            UnifiedVariant::DeepOnet => "deeponet",
        }
    }
}

impl FromStr for UnifiedVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled-mlp" => Ok(UnifiedVariant::CoupledMlp),
            "deeponet" => Ok(UnifiedVariant::DeepOnet),
            _ => Err(Error::Config(format!("unknown unified model {s:?} (expected coupled-mlp, deeponet)"))),
        }
    }
}

/// Branch network on `eta` and trunk network on `(x_init, t)`. Output
/// channel `k` is the inner product of the branch vector with trunk
/// features `k p .. (k + 1) p`, plus a learned bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepOnet {
    pub branch: Network,
    pub trunk: Network,
    pub bias: [f64; 3],
    pub latent: usize,
}

impl DeepOnet {
    pub const TIME_COLUMN: usize = 3;

    pub fn new(branch: NetworkConfig, trunk: NetworkConfig) -> Result<Self> {
        let latent = branch.output_dim;
        if branch.input_dim != 4 || trunk.input_dim != 4 || trunk.output_dim != 3 * latent || latent == 0 {
            return Err(Error::Config(format!(
                "DeepONet needs branch 4 -> p and trunk 4 -> 3p, got branch {} -> {} and trunk {} -> {}",
                branch.input_dim, branch.output_dim, trunk.input_dim, trunk.output_dim
            )));
        }
        Ok(Self { branch: mlp_init(branch)?, trunk: mlp_init(trunk)?, bias: [0.0; 3], latent })
    }

    pub fn default_configs(latent: usize) -> (NetworkConfig, NetworkConfig) {
        (NetworkConfig::new(4, 256, 4, latent), NetworkConfig::new(4, 256, 4, 3 * latent))
    }

    pub fn param_count(&self) -> usize {
        self.branch.param_count() + self.trunk.param_count() + 3
    }

    /// Splits `[x, t, eta]` rows into trunk `[x, t]` and branch `[eta]` inputs.
    pub fn split_inputs(rows: &Matrix) -> (Matrix, Matrix) {
        let n = rows.rows();
        let mut trunk = Matrix::zeros(n, 4);
        let mut branch = Matrix::zeros(n, 4);
        for r in 0..n {
            trunk.row_mut(r).copy_from_slice(&rows.row(r)[..4]);
            branch.row_mut(r).copy_from_slice(&rows.row(r)[4..8]);
        }
        (trunk, branch)
    }

    /// Unscaled outputs from branch and trunk features.
    pub fn combine(&self, b: &Matrix, tau: &Matrix) -> Matrix {
        let p = self.latent;
        let mut out = Matrix::zeros(b.rows(), 3);
        for r in 0..b.rows() {
            let br = b.row(r);
            let tr = tau.row(r);
            for k in 0..3 {
                let dot: f64 = br.iter().zip(&tr[k * p..(k + 1) * p]).map(|(x, y)| x * y).sum();
                out.set(r, k, dot + self.bias[k]);
            }
        }
        out
    }

    pub fn forward(&self, rows: &Matrix) -> Result<Matrix> {
        let (trunk_in, branch_in) = Self::split_inputs(rows);
        let b = self.branch.forward(&branch_in)?;
        let tau = self.trunk.forward(&trunk_in)?;
        Ok(self.combine(&b, &tau))
    }

    pub fn forward_pass(&self, rows: &Matrix) -> Result<(ForwardPass, ForwardPass)> {
        let (trunk_in, branch_in) = Self::split_inputs(rows);
        Ok((self.branch.forward_pass(&branch_in)?, self.trunk.forward_pass(&trunk_in)?))
    }

    /// Gradients of branch, trunk and bias given `upstream = dL/d(unscaled output)`.
    pub fn backward_pass(
        &self,
        passes: &(ForwardPass, ForwardPass),
        upstream: &Matrix,
    ) -> Result<(Gradients, Gradients, [f64; 3])> {
        let p = self.latent;
        let (bp, tp) = passes;
        let b = bp.output();
        let tau = tp.output();
        let n = upstream.rows();
        let mut gb = Matrix::zeros(n, p);
        let mut gt = Matrix::zeros(n, 3 * p);
        let mut gbias = [0.0; 3];
        for r in 0..n {
            let br = b.row(r);
            let tr = tau.row(r);
            for k in 0..3 {
                let h = upstream.get(r, k);
                gbias[k] += h;
                let gbr = gb.row_mut(r);
                for j in 0..p {
                    gbr[j] += h * tr[k * p + j];
                }
                let gtr = &mut gt.row_mut(r)[k * p..(k + 1) * p];
                for j in 0..p {
                    gtr[j] = h * br[j];
                }
            }
        }
        Ok((self.branch.backward_pass(bp, &gb)?, self.trunk.backward_pass(tp, &gt)?, gbias))
    }
}

/// Direct `(x_init, t, eta) -> x` baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct UnifiedModel {
    pub backbone: UnifiedBackbone,
    pub input: InputNormalizer,
    pub output: OutputScaling,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UnifiedBackbone {
    Coupled(Network),
    DeepOnet(DeepOnet),
}

impl UnifiedModel {
    pub const COUPLED_DEPTH: usize = 8;
    pub const COUPLED_HIDDEN: usize = 256;
    pub const DEFAULT_LATENT: usize = 128;

    pub fn coupled_config() -> NetworkConfig {
        NetworkConfig::new(Self::COUPLED_DEPTH, Self::COUPLED_HIDDEN, 8, 3)
    }

    pub fn coupled(config: NetworkConfig, input: InputNormalizer) -> Result<Self> {
        if config.input_dim != 8 || config.output_dim != 3 {
            return Err(Error::Config("coupled MLP maps 8 inputs to 3 outputs".into()));
        }
        Ok(Self { backbone: UnifiedBackbone::Coupled(mlp_init(config)?), input, output: OutputScaling::identity(3) })
    }

    pub fn deeponet(branch: NetworkConfig, trunk: NetworkConfig, input: InputNormalizer) -> Result<Self> {
        Ok(Self { backbone: UnifiedBackbone::DeepOnet(DeepOnet::new(branch, trunk)?), input, output: OutputScaling::identity(3) })
    }

    pub fn variant(&self) -> UnifiedVariant {
        match self.backbone {
            UnifiedBackbone::Coupled(_) => UnifiedVariant::CoupledMlp,
            UnifiedBackbone::DeepOnet(_) => UnifiedVariant::DeepOnet,
        }
    }

    pub fn param_count(&self) -> usize {
        match &self.backbone {
            UnifiedBackbone::Coupled(n) => n.param_count(),
            UnifiedBackbone::DeepOnet(d) => d.param_count(),
        }
    }

    pub(crate) fn predict_rows(&self, n: usize, fill: impl Fn(usize, &mut [f64])) -> Result<Vec<Vec3>> {
        let raw = match &self.backbone {
            UnifiedBackbone::Coupled(net) => forward_rows(net, n, fill)?,
            UnifiedBackbone::DeepOnet(d) => {
                let mut out = Matrix::zeros(n, 3);
                let mut start = 0;
                while start < n {
                    let rows = CHUNK_ROWS.min(n - start);
                    let mut batch = Matrix::zeros(rows, 8);
                    for r in 0..rows {
                        fill(start + r, batch.row_mut(r));
                    }
                    let y = d.forward(&batch)?;
                    out.as_mut_slice()[start * 3..(start + rows) * 3].copy_from_slice(y.as_slice());
                    start += rows;
                }
                out
            }
        };
        Ok(scale_rows(&self.output, &raw))
    }

    /// Absolute positions at every node and step, time-major.
    pub fn predict_trajectory(&self, x_init: &[Vec3], eta: [f64; 4], grid: &TimeGrid) -> Result<Vec<Vec3>> {
        let n = x_init.len();
        self.predict_rows(n * grid.n_steps, |r, row| self.input.node_row(x_init[r % n], grid.time(r / n), eta, row))
    }

    pub fn envelope(&self) -> Envelope {
        let extra = match &self.backbone {
            UnifiedBackbone::Coupled(_) => None,
            UnifiedBackbone::DeepOnet(d) => Some(serde_json::json!({ "latent": d.latent, "bias": d.bias })),
        };
        Envelope { kind: self.variant().name().into(), rotation_mode: None, input: self.input.clone(), output: self.output.clone(), extra }
    }

    /// The coupled MLP is one file; DeepONet writes the branch (with the
    /// envelope) to `path` and the trunk to `path` with a `.trunk` suffix.
    pub fn save(&self, path: &Path) -> Result<()> {
        let env = self.envelope();
        match &self.backbone {
            UnifiedBackbone::Coupled(net) => write_envelope(path, net, &env),
            UnifiedBackbone::DeepOnet(d) => {
                write_envelope(path, &d.branch, &env)?;
                write_envelope(&trunk_path(path), &d.trunk, &env)
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (net, env) = read_envelope(path)?;
        let backbone = match env.kind.as_str() {
            "coupled-mlp" => UnifiedBackbone::Coupled(net),
            "deeponet" => {
                let extra = env.extra.clone().ok_or_else(|| Error::format(path, "deeponet checkpoint without latent/bias"))?;
                let latent = extra["latent"].as_u64().ok_or_else(|| Error::format(path, "missing latent"))? as usize;
                let bias: [f64; 3] = serde_json::from_value(extra["bias"].clone()).map_err(|e| Error::format(path, e.to_string()))?;
                let (trunk, _) = read_envelope(&trunk_path(path))?;
                UnifiedBackbone::DeepOnet(DeepOnet { branch: net, trunk, bias, latent })
            }
            other => return Err(Error::format(path, format!("expected a unified-model checkpoint, found {other:?}"))),
        };
        Ok(Self { backbone, input: env.input, output: env.output })
    }
}

fn trunk_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".trunk");
    s.into()
}

/// Absolute positions for a batch of nodes at one time.
pub fn unified_predict(model: &UnifiedModel, x_init: &[Vec3], t: f64, eta: [f64; 4]) -> Result<Vec<Vec3>> {
    model.predict_rows(x_init.len(), |r, row| model.input.node_row(x_init[r], t, eta, row))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_budgets() {
        assert_eq!(UnifiedModel::coupled_config().param_count(), 397_827);
        let (b, t) = DeepOnet::default_configs(UnifiedModel::DEFAULT_LATENT);
        let m = UnifiedModel::deeponet(b, t, InputNormalizer::default()).unwrap();
        let count = m.param_count();
        assert!((380_000..420_000).contains(&count), "{count}");
    }

    #[test]
    fn zero_branch_gives_bias() {
        let (b, t) = (NetworkConfig::new(2, 8, 4, 3), NetworkConfig::new(2, 8, 4, 9));
        let mut m = UnifiedModel::deeponet(b, t, InputNormalizer::default()).unwrap();
        if let UnifiedBackbone::DeepOnet(d) = &mut m.backbone {
            d.branch.params_mut().iter_mut().for_each(|p| *p = 0.0);
            d.bias = [0.5, -1.0, 2.0];
        }
        let y = unified_predict(&m, &[[0.1, 0.2, 0.3], [0.7, 0.1, 0.9]], 0.3, [50.0, 5.0, 20.0, 1.0]).unwrap();
        assert!(y.iter().all(|v| *v == [0.5, -1.0, 2.0]));
    }

    #[test]
    fn inner_product_matches_explicit_sum() {
        for p in [1usize, 2] {
            let (b, t) = (NetworkConfig::new(2, 5, 4, p).with_seed(1), NetworkConfig::new(2, 5, 4, 3 * p).with_seed(2));
            let mut d = DeepOnet::new(b, t).unwrap();
            d.bias = [0.1, 0.2, 0.3];
            let rows = Matrix::from_rows(&[vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]]).unwrap();
            let y = d.forward(&rows).unwrap();
            let bv = d.branch.forward(&Matrix::from_rows(&[vec![0.5, 0.6, 0.7, 0.8]]).unwrap()).unwrap();
            let tv = d.trunk.forward(&Matrix::from_rows(&[vec![0.1, 0.2, 0.3, 0.4]]).unwrap()).unwrap();
            for k in 0..3 {
                let mut s = d.bias[k];
                for j in 0..p {
                    s += bv.get(0, j) * tv.get(0, k * p + j);
                }
                assert!((y.get(0, k) - s).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn coupled_duplicate_rows_and_round_trip() {
        let m = UnifiedModel::coupled(NetworkConfig::new(3, 16, 8, 3).with_seed(4), InputNormalizer::default()).unwrap();
        let y = unified_predict(&m, &[[0.2, 0.2, 0.2], [0.2, 0.2, 0.2]], 0.1, [60.0, 0.0, 50.0, 1.0]).unwrap();
        assert_eq!(y[0], y[1]);
        let dir = tempfile::tempdir().unwrap();
        m.save(&dir.path().join("c.ckpt")).unwrap();
        assert_eq!(UnifiedModel::load(&dir.path().join("c.ckpt")).unwrap(), m);
        let (b, t) = (NetworkConfig::new(2, 8, 4, 3), NetworkConfig::new(2, 8, 4, 9));
        let d = UnifiedModel::deeponet(b, t, InputNormalizer::default()).unwrap();
        d.save(&dir.path().join("d.ckpt")).unwrap();
        assert_eq!(UnifiedModel::load(&dir.path().join("d.ckpt")).unwrap(), d);
    }
}

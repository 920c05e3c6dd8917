use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{read_envelope, write_envelope, Envelope, InputNormalizer, OutputScaling};
use crate::data::TimeGrid;
use crate::kinematics::{compose_increments, IncrementSeries, Quaternion, RigidTransform};
use crate::tensor_nn::{mlp_init, Matrix, Network, NetworkConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RotationMode {
    /// Absolute intrinsic z-y-x Euler angles.
    #[serde(rename = "euler")]
    Euler,
    /// Absolute unit quaternion.
    #[serde(rename = "quaternion")]
    Quaternion,
    /// Per-step quaternion and translation increments.
    #[serde(rename = "quaternion-incremental")]
    Incremental,
}

impl RotationMode {
    pub const ALL: [RotationMode; 3] = [RotationMode::Euler, RotationMode::Quaternion, RotationMode::Incremental];

    pub fn output_width(self) -> usize {
        match self {
            RotationMode::Euler => 6,
            _ => 7,
        }
    }

    pub fn rotation_width(self) -> usize {
        self.output_width() - 3
    }

    pub fn name(self) -> &'static str {
        match self {
            RotationMode::Euler => "euler",
            RotationMode::Quaternion => "quaternion",
            RotationMode::Incremental => "quaternion-incremental",
        }
    }
}

impl FromStr for RotationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown rotation mode {s:?} (expected euler, quaternion, quaternion-incremental)")))
    }
}

/// Norm below which a predicted quaternion is replaced by the identity.
pub const QUATERNION_DEGENERACY: f64 = 1e-8;

/// Rotation encoded in the leading channels of an output row. Returns the
/// unit quaternion and whether the identity fallback was used.
pub fn decode_rotation(mode: RotationMode, row: &[f64]) -> (Quaternion, bool) {
    match mode {
        RotationMode::Euler => (Quaternion::from_euler_zyx([row[0], row[1], row[2]]), false),
        _ => {
            let q = Quaternion::new(row[0], row[1], row[2], row[3]);
            if q.norm() < QUATERNION_DEGENERACY {
                (Quaternion::IDENTITY, true)
            } else {
                (q.scale(1.0 / q.norm()), false)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidNetModel {
    pub net: Network,
    pub mode: RotationMode,
    pub input: InputNormalizer,
    pub output: OutputScaling,
}

impl RigidNetModel {
    pub const DEPTH: usize = 3;
    pub const HIDDEN: usize = 256;

    pub fn default_config(mode: RotationMode) -> NetworkConfig {
        NetworkConfig::new(Self::DEPTH, Self::HIDDEN, 5, mode.output_width())
    }

    pub fn new(config: NetworkConfig, mode: RotationMode, input: InputNormalizer) -> Result<Self> {
        if config.input_dim != 5 || config.output_dim != mode.output_width() {
            return Err(Error::Config(format!(
                "RigidNet in {} mode needs 5 inputs and {} outputs, got {} and {}",
                mode.name(),
                mode.output_width(),
                config.input_dim,
                config.output_dim
            )));
        }
        let width = config.output_dim;
        Ok(Self { net: mlp_init(config)?, mode, input, output: OutputScaling::identity(width) })
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    /// Normalized `[t, eta]` rows for every step of `grid`.
    pub fn inputs(&self, eta: [f64; 4], grid: &TimeGrid) -> Matrix {
        let mut m = Matrix::zeros(grid.n_steps, 5);
        for k in 0..grid.n_steps {
            self.input.rigid_row(grid.time(k), eta, m.row_mut(k));
        }
        m
    }

    /// Scaled per-step outputs, one row per time step.
    pub fn outputs(&self, eta: [f64; 4], grid: &TimeGrid) -> Result<Matrix> {
        let raw = self.net.forward(&self.inputs(eta, grid))?;
        Ok(self.scale_outputs(&raw))
    }

    pub fn scale_outputs(&self, raw: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(raw.rows(), raw.cols());
        for r in 0..raw.rows() {
            self.output.apply(raw.row(r), out.row_mut(r));
        }
        out
    }

    /// Absolute rigid series from scaled output rows.
    pub fn series_from_outputs(&self, outputs: &Matrix) -> Vec<RigidTransform> {
        let mut degenerate = 0;
        let mut rotations = Vec::with_capacity(outputs.rows());
        let mut translations = Vec::with_capacity(outputs.rows());
        let rw = self.mode.rotation_width();
        for r in 0..outputs.rows() {
            let row = outputs.row(r);
            let (q, fallback) = decode_rotation(self.mode, row);
            degenerate += fallback as usize;
            rotations.push(q);
            translations.push([row[rw], row[rw + 1], row[rw + 2]]);
        }
        if degenerate > 0 {
            warn!("{degenerate} predicted rotations had norm < {QUATERNION_DEGENERACY:e}; identity substituted");
        }
        if self.mode == RotationMode::Incremental {
            let (rotations, translations) = compose_increments(&IncrementSeries { translations, rotations });
            rotations.into_iter().zip(translations).map(|(q, t)| RigidTransform::new(q, t)).collect()
        } else {
            rotations.into_iter().zip(translations).map(|(q, t)| RigidTransform::new(q, t)).collect()
        }
    }

    pub fn envelope(&self) -> Envelope {
        Envelope {
            kind: "rigidnet".into(),
            rotation_mode: Some(self.mode),
            input: self.input.clone(),
            output: self.output.clone(),
            extra: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_envelope(path, &self.net, &self.envelope())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (net, env) = read_envelope(path)?;
        if env.kind != "rigidnet" {
            return Err(Error::format(path, format!("expected a rigidnet checkpoint, found {:?}", env.kind)));
        }
        let mode = env.rotation_mode.ok_or_else(|| Error::format(path, "rigidnet checkpoint without rotation mode"))?;
        Ok(Self { net, mode, input: env.input, output: env.output })
    }
}

/// Absolute `(q(t), T(t))` series predicted for the scenario `eta`.
pub fn rigidnet_rollout(model: &RigidNetModel, eta: [f64; 4], grid: &TimeGrid) -> Result<Vec<RigidTransform>> {
    Ok(model.series_from_outputs(&model.outputs(eta, grid)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeroed(mode: RotationMode) -> RigidNetModel {
        let mut m = RigidNetModel::new(NetworkConfig::new(3, 16, 5, mode.output_width()), mode, InputNormalizer::default())
            .unwrap();
        m.net.params_mut().iter_mut().for_each(|p| *p = 0.0);
        m
    }

    #[test]
    fn zero_network_rolls_out_identity() {
        let m = zeroed(RotationMode::Incremental);
        let s = rigidnet_rollout(&m, [60.0, 10.0, 50.0, 1.0], &TimeGrid::default()).unwrap();
        assert_eq!(s.len(), 100);
        assert!(s.iter().all(|r| *r == RigidTransform::IDENTITY));
    }

    #[test]
    fn constant_increment_gives_linear_ramp() {
        let mut m = zeroed(RotationMode::Incremental);
        let last = m.net.layers().len() - 1;
        m.net.bias_mut(last).copy_from_slice(&[1.0, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0]);
        let grid = TimeGrid::default();
        let s = rigidnet_rollout(&m, [60.0, 10.0, 50.0, 1.0], &grid).unwrap();
        for (k, r) in s.iter().enumerate() {
            let expected = 0.1 * grid.time(k) / grid.dt;
            assert!((r.translation[0] - expected).abs() < 1e-12);
            assert_eq!(r.rotation, Quaternion::IDENTITY);
        }
    }

    #[test]
    fn rotations_are_unit_in_every_mode() {
        for mode in RotationMode::ALL {
            let m = RigidNetModel::new(RigidNetModel::default_config(mode).with_seed(3), mode, InputNormalizer::default())
                .unwrap();
            for r in rigidnet_rollout(&m, [45.0, 30.0, 20.0, 0.5], &TimeGrid::default()).unwrap() {
                assert!((r.rotation.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn incremental_rollout_matches_manual_composition() {
        let m = RigidNetModel::new(
            RigidNetModel::default_config(RotationMode::Incremental).with_seed(5),
            RotationMode::Incremental,
            InputNormalizer::default(),
        )
        .unwrap();
        let grid = TimeGrid::default();
        let out = m.outputs([70.0, 5.0, 90.0, 1.2], &grid).unwrap();
        let inc = IncrementSeries {
            rotations: (0..out.rows()).map(|r| decode_rotation(m.mode, out.row(r)).0).collect(),
            translations: (0..out.rows()).map(|r| [out.get(r, 4), out.get(r, 5), out.get(r, 6)]).collect(),
        };
        let (qs, ts) = compose_increments(&inc);
        let s = rigidnet_rollout(&m, [70.0, 5.0, 90.0, 1.2], &grid).unwrap();
        for k in 0..grid.n_steps {
            assert_eq!(s[k].rotation, qs[k]);
            assert_eq!(s[k].translation, ts[k]);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rigid.ckpt");
        let m = RigidNetModel::new(RigidNetModel::default_config(RotationMode::Euler), RotationMode::Euler, InputNormalizer::default())
            .unwrap();
        m.save(&p).unwrap();
        assert_eq!(RigidNetModel::load(&p).unwrap(), m);
        assert_eq!("quaternion-incremental".parse::<RotationMode>().unwrap(), RotationMode::Incremental);
    }
}

//! Loss functions over flat parameter vectors of trained models.

use std::ops::Range;

use crate::data::SampleIndex;
use crate::models::{scale_rows, DeepOnet, OutputScaling, ProposedModel, UnifiedBackbone, UnifiedModel};
use crate::tensor_nn::{Matrix, Network, NetworkConfig};
use crate::training::{frozen_targets, TrainingSet};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone)]
enum Backbone {
    Mlp(Network),
    DeepOnet(DeepOnet),
}

impl Backbone {
    fn params(&self) -> Vec<f64> {
        match self {
            Backbone::Mlp(n) => n.params().to_vec(),
            Backbone::DeepOnet(d) => d.branch.params().iter().chain(d.trunk.params()).chain(&d.bias).copied().collect(),
        }
    }

    fn blocks(&self) -> Vec<Range<usize>> {
        match self {
            Backbone::Mlp(n) => n.param_blocks(),
            Backbone::DeepOnet(d) => {
                let nb = d.branch.param_count();
                let nt = d.trunk.param_count();
                let mut b = d.branch.param_blocks();
                b.extend(d.trunk.param_blocks().into_iter().map(|r| r.start + nb..r.end + nb));
                b.push(nb + nt..nb + nt + 3);
                b
            }
        }
    }

    fn with_params(&self, p: &[f64]) -> Result<Backbone> {
        let mut out = self.clone();
        match &mut out {
            Backbone::Mlp(n) => n.set_params(p)?,
            Backbone::DeepOnet(d) => {
                let nb = d.branch.param_count();
                let nt = d.trunk.param_count();
                if p.len() != nb + nt + 3 {
                    return Err(Error::Shape(format!("expected {} DeepONet parameters, got {}", nb + nt + 3, p.len())));
                }
                d.branch.set_params(&p[..nb])?;
                d.trunk.set_params(&p[nb..nb + nt])?;
                d.bias.copy_from_slice(&p[nb + nt..]);
            }
        }
        Ok(out)
    }

    fn predict(&self, rows: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(rows.rows(), 3);
        let w = rows.cols();
        let mut start = 0;
        while start < rows.rows() {
            let len = crate::models::CHUNK_ROWS.min(rows.rows() - start);
            let chunk = Matrix::from_vec(len, w, rows.as_slice()[start * w..(start + len) * w].to_vec())?;
            let y = match self {
                Backbone::Mlp(n) => n.forward(&chunk)?,
                Backbone::DeepOnet(d) => d.forward(&chunk)?,
            };
            out.as_mut_slice()[start * 3..(start + len) * 3].copy_from_slice(y.as_slice());
            start += len;
        }
        Ok(out)
    }

    /// Everything other than trainable parameters that affects predictions.
    fn same_structure(&self, other: &Backbone) -> bool {
        let net_eq = |a: &Network, b: &Network| {
            let (ca, cb) = (a.config(), b.config());
            NetworkConfig { init_seed: 0, ..ca.clone() } == NetworkConfig { init_seed: 0, ..cb.clone() } && a.fourier().map(|f| f.checksum()) == b.fourier().map(|f| f.checksum())
        };
        match (self, other) {
            (Backbone::Mlp(a), Backbone::Mlp(b)) => net_eq(a, b),
            (Backbone::DeepOnet(a), Backbone::DeepOnet(b)) => {
                a.latent == b.latent && net_eq(&a.branch, &b.branch) && net_eq(&a.trunk, &b.trunk)
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
struct EvalSet {
    rows: Matrix,
    targets: Vec<Vec3>,
}

/// Which data a probe loss is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeData {
    Train,
    Val,
}

/// Mean squared error in m^2 of one backbone on fixed train and validation
/// triples, as a function of its flat parameter vector.
///
/// For the unified baselines the target is the absolute position. For the
/// proposed model only DeformationNet is perturbed; its targets are the
/// residuals with respect to the frozen RigidNet, so the loss is the
/// total-field MSE of the combined model.
#[derive(Debug, Clone)]
pub struct LossProbe {
    backbone: Backbone,
    scaling: OutputScaling,
    rigid_checksum: Option<u64>,
    train: EvalSet,
    val: EvalSet,
}

impl LossProbe {
    pub fn unified(model: &UnifiedModel, set: &TrainingSet, train: &[SampleIndex], val: &[SampleIndex]) -> Self {
        let backbone = match &model.backbone {
            UnifiedBackbone::Coupled(n) => Backbone::Mlp(n.clone()),
            UnifiedBackbone::DeepOnet(d) => Backbone::DeepOnet(d.clone()),
        };
        let eval = |s: &[SampleIndex]| EvalSet { rows: set.node_rows(s), targets: s.iter().map(|x| set.position(x)).collect() };
        Self { backbone, scaling: model.output.clone(), rigid_checksum: None, train: eval(train), val: eval(val) }
    }

    pub fn stage2(model: &ProposedModel, set: &TrainingSet, train: &[SampleIndex], val: &[SampleIndex]) -> Result<Self> {
        let eval = |s: &[SampleIndex]| -> Result<EvalSet> {
            Ok(EvalSet { rows: set.node_rows(s), targets: frozen_targets(&model.rigid, set, s)? })
        };
        Ok(Self {
            backbone: Backbone::Mlp(model.deform.net.clone()),
            scaling: model.deform.output.clone(),
            rigid_checksum: Some(model.rigid.net.checksum()),
            train: eval(train)?,
            val: eval(val)?,
        })
    }

    pub fn params(&self) -> Vec<f64> {
        self.backbone.params()
    }

    pub fn param_blocks(&self) -> Vec<Range<usize>> {
        self.backbone.blocks()
    }

    fn check(&self, other: &Backbone, scaling: &OutputScaling) -> Result<()> {
        if !self.backbone.same_structure(other) || &self.scaling != scaling {
            return Err(Error::Config(
                "checkpoint differs from the probe in architecture, Fourier frequencies or output scaling".into(),
            ));
        }
        Ok(())
    }

    /// Parameters of another unified model that shares this probe's structure.
    pub fn unified_params(&self, model: &UnifiedModel) -> Result<Vec<f64>> {
        let b = match &model.backbone {
            UnifiedBackbone::Coupled(n) => Backbone::Mlp(n.clone()),
            UnifiedBackbone::DeepOnet(d) => Backbone::DeepOnet(d.clone()),
        };
        self.check(&b, &model.output)?;
        Ok(b.params())
    }

    /// DeformationNet parameters of a model trained on the same frozen RigidNet.
    pub fn stage2_params(&self, model: &ProposedModel) -> Result<Vec<f64>> {
        if self.rigid_checksum != Some(model.rigid.net.checksum()) {
            return Err(Error::Config("stage-2 checkpoint was trained on a different RigidNet".into()));
        }
        let b = Backbone::Mlp(model.deform.net.clone());
        self.check(&b, &model.deform.output)?;
        Ok(b.params())
    }

    pub fn loss(&self, params: &[f64], data: ProbeData) -> Result<f64> {
        let set = match data {
            ProbeData::Train => &self.train,
            ProbeData::Val => &self.val,
        };
        let raw = self.backbone.with_params(params)?.predict(&set.rows)?;
        let pred = scale_rows(&self.scaling, &raw);
        let total: f64 = pred.iter().zip(&set.targets).map(|(p, t)| (0..3).map(|j| (p[j] - t[j]).powi(2)).sum::<f64>()).sum();
        Ok(total / set.targets.len().max(1) as f64)
    }

    pub fn train_loss(&self, params: &[f64]) -> Result<f64> {
        self.loss(params, ProbeData::Train)
    }

    pub fn val_loss(&self, params: &[f64]) -> Result<f64> {
        self.loss(params, ProbeData::Val)
    }
}

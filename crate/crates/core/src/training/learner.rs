//! Shared mini-batch loop over one trainable backbone.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{derive_seed, LrSchedule};
use super::report::{EpochRecord, TrainReport};
use crate::models::{DeepOnet, OutputScaling, CHUNK_ROWS};
use crate::tensor_nn::{adam_step, AdamConfig, AdamState, ForwardPass, Matrix, Network};
use crate::{Error, Result, Vec3};

pub(crate) enum Learner {
    Mlp { net: Network, adam: AdamState },
    DeepOnet { model: DeepOnet, branch: AdamState, trunk: AdamState, bias: AdamState },
}

pub(crate) enum Pass {
    Mlp(ForwardPass),
    DeepOnet(Box<(ForwardPass, ForwardPass)>),
}

impl Learner {
    pub fn mlp(net: Network, adam: AdamConfig) -> Self {
        let state = AdamState::for_network(&net, adam);
        Learner::Mlp { net, adam: state }
    }

    pub fn deeponet(model: DeepOnet, adam: AdamConfig) -> Self {
        Learner::DeepOnet {
            branch: AdamState::for_network(&model.branch, adam),
            trunk: AdamState::for_network(&model.trunk, adam),
            bias: AdamState::new(3, adam),
            model,
        }
    }

    pub fn set_lr(&mut self, lr: f64) {
        match self {
            Learner::Mlp { adam, .. } => adam.config.lr = lr,
            Learner::DeepOnet { branch, trunk, bias, .. } => {
                for s in [branch, trunk, bias] {
                    s.config.lr = lr;
                }
            }
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Learner::Mlp { net, .. } => net.param_count(),
            Learner::DeepOnet { model, .. } => model.param_count(),
        }
    }

    pub fn forward(&self, rows: &Matrix) -> Result<Matrix> {
        match self {
            Learner::Mlp { net, .. } => net.forward(rows),
            Learner::DeepOnet { model, .. } => model.forward(rows),
        }
    }

    /// Forward in bounded chunks.
    pub fn predict(&self, rows: &Matrix) -> Result<Matrix> {
        let n = rows.rows();
        let w = rows.cols();
        let mut out: Option<Matrix> = None;
        let mut start = 0;
        while start < n {
            let len = CHUNK_ROWS.min(n - start);
            let chunk = Matrix::from_vec(len, w, rows.as_slice()[start * w..(start + len) * w].to_vec())?;
            let y = self.forward(&chunk)?;
            let o = out.get_or_insert_with(|| Matrix::zeros(n, y.cols()));
            let c = y.cols();
            o.as_mut_slice()[start * c..(start + len) * c].copy_from_slice(y.as_slice());
            start += len;
        }
        Ok(out.unwrap_or_else(|| Matrix::zeros(0, 0)))
    }

    /// Raw outputs and the cache needed by [`Learner::apply`].
    pub fn forward_pass(&self, rows: &Matrix) -> Result<(Matrix, Pass)> {
        match self {
            Learner::Mlp { net, .. } => {
                let p = net.forward_pass(rows)?;
                Ok((p.output().clone(), Pass::Mlp(p)))
            }
            Learner::DeepOnet { model, .. } => {
                let p = model.forward_pass(rows)?;
                let y = model.combine(p.0.output(), p.1.output());
                Ok((y, Pass::DeepOnet(Box::new(p))))
            }
        }
    }

    /// Backpropagates `upstream = dL/d(raw output)` and takes one Adam step.
    pub fn apply(&mut self, pass: &Pass, upstream: &Matrix) -> Result<()> {
        match (self, pass) {
            (Learner::Mlp { net, adam }, Pass::Mlp(p)) => {
                let g = net.backward_pass(p, upstream)?;
                adam_step(adam, net, &g)
            }
            (Learner::DeepOnet { model, branch, trunk, bias }, Pass::DeepOnet(p)) => {
                let (gb, gt, gbias) = model.backward_pass(p, upstream)?;
                adam_step(branch, &mut model.branch, &gb)?;
                adam_step(trunk, &mut model.trunk, &gt)?;
                bias.update(&mut model.bias, &gbias).map_err(|_| Error::NonFiniteGradient { layer: model.branch.layers().len() })
            }
            _ => unreachable!("pass from a different learner"),
        }
    }

    pub fn into_network(self) -> Network {
        match self {
            Learner::Mlp { net, .. } => net,
            Learner::DeepOnet { .. } => panic!("DeepONet learner has no single network"),
        }
    }

    pub fn into_deeponet(self) -> DeepOnet {
        match self {
            Learner::DeepOnet { model, .. } => model,
            Learner::Mlp { .. } => panic!("MLP learner is not a DeepONet"),
        }
    }
}

/// Epoch permutation of `0..n`, reproducible from `(seed, epoch)`.
pub(crate) fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, epoch as u64));
    order.shuffle(&mut rng);
    order
}

pub(crate) fn check_finite(loss: f64, epoch: usize, what: &str) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged { epoch, reason: format!("{what} is {loss}") })
    }
}

/// Batch loss: given sample indices and raw outputs, the batch-mean loss
/// and its gradient with respect to the raw outputs.
pub(crate) type BatchLoss<'a> = dyn Fn(&[usize], &Matrix) -> (f64, Matrix) + 'a;

pub(crate) struct FitSpec<'a> {
    pub label: String,
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub lr: f64,
    pub schedule: LrSchedule,
    /// Inputs of every training sample.
    pub rows: &'a Matrix,
}

/// Shuffled mini-batch Adam over `spec.rows`, validating after every epoch.
pub(crate) fn fit(
    learner: &mut Learner,
    spec: &FitSpec,
    loss: &BatchLoss,
    val: &mut dyn FnMut(&Learner) -> Result<f64>,
) -> Result<TrainReport> {
    let n = spec.rows.rows();
    let w = spec.rows.cols();
    let mut report = TrainReport::new(spec.label.clone(), learner.param_count());
    if n == 0 && spec.epochs > 0 {
        return Err(Error::Missing(format!("{}: no training samples", spec.label)));
    }
    for epoch in 1..=spec.epochs {
        let start = Instant::now();
        learner.set_lr(spec.schedule.lr(spec.lr, epoch, spec.epochs));
        let order = epoch_order(n, spec.shuffle_seed, epoch);
        let mut total = 0.0;
        for idx in order.chunks(spec.batch_size) {
            let mut batch = Matrix::zeros(idx.len(), w);
            for (r, &i) in idx.iter().enumerate() {
                batch.row_mut(r).copy_from_slice(spec.rows.row(i));
            }
            let (raw, pass) = learner.forward_pass(&batch)?;
            let (l, upstream) = loss(idx, &raw);
            check_finite(l, epoch, "training loss")?;
            learner.apply(&pass, &upstream)?;
            total += l * idx.len() as f64;
        }
        let val_loss = val(learner)?;
        check_finite(val_loss, epoch, "validation loss")?;
        report.epochs.push(EpochRecord { epoch, train_loss: total / n as f64, val_loss, seconds: start.elapsed().as_secs_f64() });
        log::debug!("{} epoch {epoch}: train {:.4e} val {val_loss:.4e}", spec.label, total / n as f64);
    }
    Ok(report)
}

/// Mean squared error of scaled outputs against 3-vector targets, with the
/// gradient with respect to raw outputs.
pub(crate) fn mse_loss<'a>(scaling: &'a OutputScaling, targets: &'a [Vec3]) -> impl Fn(&[usize], &Matrix) -> (f64, Matrix) + 'a {
    move |idx: &[usize], raw: &Matrix| {
        let b = idx.len() as f64;
        let mut grad = Matrix::zeros(raw.rows(), 3);
        let mut loss = 0.0;
        let mut y = [0.0; 3];
        for (r, &i) in idx.iter().enumerate() {
            scaling.apply(raw.row(r), &mut y);
            let g = grad.row_mut(r);
            for j in 0..3 {
                let e = y[j] - targets[i][j];
                loss += e * e;
                g[j] = 2.0 * e * scaling.scale[j] / b;
            }
        }
        (loss / b, grad)
    }
}

/// Mean squared error of scaled predictions on `rows` against `targets`.
pub(crate) fn mse_of(learner: &Learner, scaling: &OutputScaling, rows: &Matrix, targets: &[Vec3]) -> Result<f64> {
    let raw = learner.predict(rows)?;
    let mut y = [0.0; 3];
    let mut total = 0.0;
    for (r, t) in targets.iter().enumerate() {
        scaling.apply(raw.row(r), &mut y);
        total += (0..3).map(|j| (y[j] - t[j]) * (y[j] - t[j])).sum::<f64>();
    }
    Ok(if targets.is_empty() { 0.0 } else { total / targets.len() as f64 })
}

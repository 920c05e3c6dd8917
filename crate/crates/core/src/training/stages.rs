use std::time::Instant;

use super::config::{streams, ArchConfig, Strategy, TrainConfig};
use super::learner::{check_finite, epoch_order, fit, mse_loss, mse_of, FitSpec, Learner};
use super::losses::{rigid_loss_grad, sampled_targets};
use super::report::{EpochRecord, TrainReport};
use super::rollout::rollout_forward;
use super::set::TrainingSet;
use crate::data::SampleIndex;
use crate::kinematics::{increment_targets, rigid_point, RigidTransform};
use crate::models::{
    label_rigid_positions, rigid_positions, DeepOnet, DeformationNetModel, OracleKind, OracleModel, OutputScaling,
    ProposedModel, RigidNetModel, RotationMode, UnifiedBackbone, UnifiedModel, UnifiedVariant,
};
use crate::tensor_nn::{mlp_init, Matrix, NetworkConfig};
use crate::{Error, Mat3, Result, Vec3};

/// Per-step RigidNet targets of one scenario in the layout of `mode`.
pub fn rigid_targets(mode: RotationMode, labels: &crate::kinematics::DecompositionLabels) -> Vec<f64> {
    let mut out = Vec::with_capacity(labels.n_steps() * mode.output_width());
    match mode {
        RotationMode::Incremental => {
            let inc = increment_targets(labels);
            for (q, t) in inc.rotations.iter().zip(&inc.translations) {
                out.extend_from_slice(&q.to_array());
                out.extend_from_slice(t);
            }
        }
        RotationMode::Quaternion => {
            for (q, t) in labels.rotations.iter().zip(&labels.translations) {
                out.extend_from_slice(&q.to_array());
                out.extend_from_slice(t);
            }
        }
        RotationMode::Euler => {
            for (q, t) in labels.rotations.iter().zip(&labels.translations) {
                out.extend_from_slice(&q.to_euler_zyx());
                out.extend_from_slice(t);
            }
        }
    }
    out
}

fn rigid_net_config(cfg: &TrainConfig, mode: RotationMode) -> NetworkConfig {
    cfg.rigid.network(5, mode.output_width(), 0, cfg.seed_for(streams::RIGID_INIT), cfg.fourier_seed)
}

fn deform_config(cfg: &TrainConfig) -> NetworkConfig {
    cfg.deform.network(8, 3, DeformationNetModel::TIME_COLUMN, cfg.seed_for(streams::DEFORM_INIT), cfg.fourier_seed)
}

/// Per-channel statistics of 3-vector targets over every node and step of
/// the training scenarios, so the scaling does not depend on the seed.
fn field_scaling(set: &TrainingSet, field: impl Fn(usize) -> Vec<Vec3>) -> Result<OutputScaling> {
    let flat: Vec<f64> = set.train.iter().flat_map(|&s| field(s)).flatten().collect();
    OutputScaling::fit(&flat, 3)
}

/// Untrained RigidNet with output scaling fitted to the training labels.
pub fn init_rigidnet(cfg: &TrainConfig, set: &TrainingSet) -> Result<RigidNetModel> {
    let mode = cfg.rotation_mode;
    let mut model = RigidNetModel::new(rigid_net_config(cfg, mode), mode, set.input.clone())?;
    let targets: Vec<f64> = set.train.iter().flat_map(|&s| rigid_targets(mode, &set.labels[s])).collect();
    model.output = OutputScaling::fit(&targets, mode.output_width())?;
    Ok(model)
}

/// Untrained DeformationNet scaled to the label residual statistics.
pub fn init_deformnet(cfg: &TrainConfig, set: &TrainingSet) -> Result<DeformationNetModel> {
    let mut model = DeformationNetModel::new(deform_config(cfg), set.input.clone())?;
    model.output = field_scaling(set, |s| set.labels[s].residuals.clone())?;
    Ok(model)
}

/// Mean squared distance between predicted and label rigid-mapped positions
/// over every node and step of `scenarios`.
pub fn rigid_only_mse(model: &RigidNetModel, set: &TrainingSet, scenarios: &[usize]) -> Result<f64> {
    let raw = model.net.forward(&set.rigid_rows(scenarios))?;
    rigid_only_from_raw(model, set, scenarios, &raw)
}

fn rigid_only_from_raw(model: &RigidNetModel, set: &TrainingSet, scenarios: &[usize], raw: &Matrix) -> Result<f64> {
    let steps = set.n_steps();
    let outputs = model.scale_outputs(raw);
    let x = set.x_init();
    let mut total = 0.0;
    for (j, &s) in scenarios.iter().enumerate() {
        let rows = Matrix::from_vec(steps, outputs.cols(), outputs.as_slice()[j * steps * outputs.cols()..(j + 1) * steps * outputs.cols()].to_vec())?;
        let series = model.series_from_outputs(&rows);
        let pred = rigid_positions(x, set.centroid, &series);
        let truth = label_rigid_positions(x, &set.labels[s]);
        total += pred.iter().zip(&truth).map(|(a, b)| sq3(a, b)).sum::<f64>();
    }
    Ok(total / (scenarios.len() * steps * x.len()) as f64)
}

fn sq3(a: &Vec3, b: &Vec3) -> f64 {
    (0..3).map(|j| (a[j] - b[j]) * (a[j] - b[j])).sum()
}

/// Supervised RigidNet fit on per-step labels. Quaternion modes use the
/// sign-invariant loss (on increments in incremental mode); Euler mode uses
/// plain squared error on angles and translation. Validation is the
/// rigid-only reconstruction error on the validation scenarios.
pub fn train_stage1(cfg: &TrainConfig, set: &TrainingSet) -> Result<(RigidNetModel, TrainReport)> {
    cfg.validate()?;
    let model = init_rigidnet(cfg, set)?;
    train_stage1_from(cfg, set, model, cfg.stage1_epochs)
}

pub(crate) fn train_stage1_from(
    cfg: &TrainConfig,
    set: &TrainingSet,
    mut model: RigidNetModel,
    epochs: usize,
) -> Result<(RigidNetModel, TrainReport)> {
    let mode = model.mode;
    let width = mode.output_width();
    let targets: Vec<f64> = set.train.iter().flat_map(|&s| rigid_targets(mode, &set.labels[s])).collect();
    let rows = set.rigid_rows(&set.train);
    let val_rows = set.rigid_rows(&set.val);
    let scaling = model.output.clone();
    let loss = move |idx: &[usize], raw: &Matrix| {
        let b = idx.len() as f64;
        let mut grad = Matrix::zeros(raw.rows(), width);
        let mut total = 0.0;
        let mut y = vec![0.0; width];
        for (r, &i) in idx.iter().enumerate() {
            scaling.apply(raw.row(r), &mut y);
            let t = &targets[i * width..(i + 1) * width];
            let g = grad.row_mut(r);
            if mode == RotationMode::Euler {
                for j in 0..width {
                    let e = y[j] - t[j];
                    total += e * e;
                    g[j] = 2.0 * e;
                }
            } else {
                let (l, gu, gt) = rigid_loss_grad(
                    [y[0], y[1], y[2], y[3]],
                    [y[4], y[5], y[6]],
                    [t[0], t[1], t[2], t[3]],
                    [t[4], t[5], t[6]],
                );
                total += l;
                g[..4].copy_from_slice(&gu);
                g[4..].copy_from_slice(&gt);
            }
            for j in 0..width {
                g[j] *= scaling.scale[j] / b;
            }
        }
        (total / b, grad)
    };
    let template = model.clone();
    let mut val = |l: &Learner| -> Result<f64> { rigid_only_from_raw(&template, set, &set.val, &l.predict(&val_rows)?) };
    let spec = FitSpec {
        label: format!("rigidnet-{}", mode.name()),
        epochs,
        batch_size: cfg.rigid_batch_size,
        shuffle_seed: cfg.seed_for(streams::RIGID_SHUFFLE),
        lr: cfg.adam.lr,
        schedule: cfg.lr_schedule,
        rows: &rows,
    };
    let mut learner = Learner::mlp(model.net.clone(), cfg.adam);
    let report = fit(&mut learner, &spec, &loss, &mut val)?;
    model.net = learner.into_network();
    Ok((model, report))
}

fn rollouts(model: &RigidNetModel, set: &TrainingSet, scenarios: &[usize]) -> Result<Vec<Option<Vec<RigidTransform>>>> {
    let mut out = vec![None; set.dataset.len()];
    for &s in scenarios {
        out[s] = Some(crate::models::rigidnet_rollout(model, set.eta(s), &set.dataset.grid)?);
    }
    Ok(out)
}

/// Residual targets of sampled triples with respect to a fixed rigid model.
pub fn frozen_targets(rigid: &RigidNetModel, set: &TrainingSet, samples: &[SampleIndex]) -> Result<Vec<Vec3>> {
    let mut scen: Vec<usize> = samples.iter().map(|s| s.scenario as usize).collect();
    scen.dedup();
    scen.sort_unstable();
    scen.dedup();
    sampled_targets(set, samples, &rollouts(rigid, set, &scen)?)
}

/// DeformationNet fit on residuals against a frozen RigidNet. The
/// validation loss is the total-field MSE of the combined model.
pub fn train_stage2(cfg: &TrainConfig, rigid: &RigidNetModel, set: &TrainingSet) -> Result<(DeformationNetModel, TrainReport)> {
    cfg.validate()?;
    let before = rigid.net.checksum();
    let mut deform = init_deformnet(cfg, set)?;
    let samples = set.train_samples(cfg.ratio, cfg.seed_for(streams::SUBSAMPLE))?;
    let rows = set.node_rows(&samples);
    let targets = frozen_targets(rigid, set, &samples)?;
    let val_samples = set.val_samples(cfg.val_ratio)?;
    let val_rows = set.node_rows(&val_samples);
    let val_targets = frozen_targets(rigid, set, &val_samples)?;
    let scaling = deform.output.clone();
    let loss = mse_loss(&scaling, &targets);
    let mut val = |l: &Learner| mse_of(l, &scaling, &val_rows, &val_targets);
    let spec = FitSpec {
        label: "deformationnet".into(),
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        shuffle_seed: cfg.seed_for(streams::SHUFFLE),
        lr: cfg.adam.lr,
        schedule: cfg.lr_schedule,
        rows: &rows,
    };
    let mut learner = Learner::mlp(deform.net.clone(), cfg.adam);
    let report = fit(&mut learner, &spec, &loss, &mut val)?;
    deform.net = learner.into_network();
    if rigid.net.checksum() != before {
        return Err(Error::Config("RigidNet parameters changed while frozen".into()));
    }
    Ok((deform, report))
}

/// Trained model pair with its reports. `stage1` is absent for strategy D.
#[derive(Debug, Clone)]
pub struct StrategyOutcome {
    pub model: ProposedModel,
    pub stage1: Option<TrainReport>,
    pub report: TrainReport,
}

pub fn train_strategy(cfg: &TrainConfig, set: &TrainingSet) -> Result<StrategyOutcome> {
    cfg.validate()?;
    match cfg.strategy {
        Strategy::F => {
            let (rigid, r1) = train_stage1(cfg, set)?;
            let (deform, r2) = train_stage2(cfg, &rigid, set)?;
            Ok(StrategyOutcome { model: ProposedModel { rigid, deform }, stage1: Some(r1), report: r2 })
        }
        Strategy::E => {
            let rigid = init_rigidnet(cfg, set)?;
            let (rigid, r1) = train_stage1_from(cfg, set, rigid, cfg.pretrain_epochs)?;
            let deform = init_deformnet(cfg, set)?;
            let (model, r2) = train_joint(cfg, set, ProposedModel { rigid, deform }, true)?;
            Ok(StrategyOutcome { model, stage1: Some(r1), report: r2 })
        }
        Strategy::D => {
            let model = ProposedModel { rigid: init_rigidnet(cfg, set)?, deform: init_deformnet(cfg, set)? };
            let (model, report) = train_joint(cfg, set, model, true)?;
            Ok(StrategyOutcome { model, stage1: None, report })
        }
    }
}

/// Total-field MSE of a proposed model on sampled triples.
pub fn proposed_mse(model: &ProposedModel, set: &TrainingSet, samples: &[SampleIndex]) -> Result<f64> {
    let rows = set.node_rows(samples);
    let d = model.deform.predict_rows(samples.len(), |r, out| out.copy_from_slice(rows.row(r)))?;
    let targets = frozen_targets(&model.rigid, set, samples)?;
    Ok(d.iter().zip(&targets).map(|(a, b)| sq3(a, b)).sum::<f64>() / samples.len().max(1) as f64)
}

/// Both networks trained on the total-field MSE, with gradients flowing
/// through the rigid rollout. With `train_deform = false` the deformation
/// branch is held at its current output and only RigidNet moves.
pub(crate) fn train_joint(
    cfg: &TrainConfig,
    set: &TrainingSet,
    model: ProposedModel,
    train_deform: bool,
) -> Result<(ProposedModel, TrainReport)> {
    let ProposedModel { rigid, deform } = model;
    let mode = rigid.mode;
    let steps = set.n_steps();
    let samples = set.train_samples(cfg.ratio, cfg.seed_for(streams::SUBSAMPLE))?;
    let rows = set.node_rows(&samples);
    let positions: Vec<Vec3> = samples.iter().map(|s| set.position(s)).collect();
    let mut slot = vec![usize::MAX; set.dataset.len()];
    for (j, &s) in set.train.iter().enumerate() {
        slot[s] = j;
    }
    let rigid_rows = set.rigid_rows(&set.train);
    let val_samples = set.val_samples(cfg.val_ratio)?;
    let x = set.x_init();
    let c = set.centroid;

    let mut rl = Learner::mlp(rigid.net.clone(), cfg.adam);
    let mut dl = Learner::mlp(deform.net.clone(), cfg.adam);
    let rscale = rigid.output.clone();
    let dscale = deform.output.clone();
    let mut current = ProposedModel { rigid, deform };
    let mut report = TrainReport::new("joint", current.param_count());
    let n_train = set.train.len();
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let lr = cfg.lr_schedule.lr(cfg.adam.lr, epoch, cfg.epochs);
        rl.set_lr(lr);
        dl.set_lr(lr);
        let mut total = 0.0;
        for idx in epoch_order(samples.len(), cfg.seed_for(streams::SHUFFLE), epoch).chunks(cfg.batch_size) {
            let b = idx.len() as f64;
            let (rraw, rpass) = rl.forward_pass(&rigid_rows)?;
            let routs = current.rigid.scale_outputs(&rraw);
            let ros = (0..n_train)
                .map(|j| rollout_forward(mode, &routs.as_slice()[j * steps * 7..(j + 1) * steps * 7]))
                .collect::<Result<Vec<_>>>()?;
            let mut batch = Matrix::zeros(idx.len(), 8);
            for (r, &i) in idx.iter().enumerate() {
                batch.row_mut(r).copy_from_slice(rows.row(i));
            }
            let (draw, dpass) = dl.forward_pass(&batch)?;
            let mut dgrad = Matrix::zeros(idx.len(), 3);
            let mut g_r = vec![vec![[[0.0; 3]; 3]; steps]; n_train];
            let mut g_t = vec![vec![[0.0; 3]; steps]; n_train];
            let mut loss = 0.0;
            let mut d = [0.0; 3];
            for (r, &i) in idx.iter().enumerate() {
                let s = samples[i];
                let (j, k) = (slot[s.scenario as usize], s.time as usize);
                let p = x[s.node as usize];
                let ro = &ros[j];
                let a = rigid_point(&ro.r[k], c, ro.t[k], p);
                dscale.apply(draw.row(r), &mut d);
                let e: Vec3 = std::array::from_fn(|m| a[m] + d[m] - positions[i][m]);
                loss += e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
                let g = e.map(|v| 2.0 * v / b);
                let dr = dgrad.row_mut(r);
                for m in 0..3 {
                    dr[m] = g[m] * dscale.scale[m];
                    g_t[j][k][m] += g[m];
                    for n in 0..3 {
                        g_r[j][k][m][n] += g[m] * (p[n] - c[n]);
                    }
                }
            }
            let loss = loss / b;
            check_finite(loss, epoch, "joint training loss")?;
            let mut rgrad = Matrix::zeros(rraw.rows(), 7);
            for j in 0..n_train {
                let gy = ros[j].backward(&g_r[j], &g_t[j]);
                let dst = &mut rgrad.as_mut_slice()[j * steps * 7..(j + 1) * steps * 7];
                for (q, v) in dst.iter_mut().zip(&gy).enumerate() {
                    *v.0 = v.1 * rscale.scale[q % 7];
                }
            }
            rl.apply(&rpass, &rgrad)?;
            if train_deform {
                dl.apply(&dpass, &dgrad)?;
            }
            total += loss * b;
        }
        current.rigid.net = match &rl {
            Learner::Mlp { net, .. } => net.clone(),
            Learner::DeepOnet { .. } => unreachable!(),
        };
        if train_deform {
            current.deform.net = match &dl {
                Learner::Mlp { net, .. } => net.clone(),
                Learner::DeepOnet { .. } => unreachable!(),
            };
        }
        let val_loss = proposed_mse(&current, set, &val_samples)?;
        check_finite(val_loss, epoch, "validation loss")?;
        report.epochs.push(EpochRecord {
            epoch,
            train_loss: total / samples.len() as f64,
            val_loss,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok((current, report))
}

/// Coupled MLP or DeepONet predicting absolute positions.
pub fn train_unified(cfg: &TrainConfig, set: &TrainingSet) -> Result<(UnifiedModel, TrainReport)> {
    cfg.validate()?;
    let arch = &cfg.unified;
    let seed = cfg.seed_for(streams::UNIFIED_INIT);
    let samples = set.train_samples(cfg.ratio, cfg.seed_for(streams::SUBSAMPLE))?;
    let targets: Vec<Vec3> = samples.iter().map(|s| set.position(s)).collect();
    let scaling = field_scaling(set, |s| set.dataset.trajectories[s].positions.clone())?;
    let learner = match cfg.unified_variant {
        UnifiedVariant::CoupledMlp => Learner::mlp(mlp_init(arch.network(8, 3, 3, seed, cfg.fourier_seed))?, cfg.adam),
        UnifiedVariant::DeepOnet => {
            let branch = ArchConfig { fourier: None, ..*arch }.network(4, arch.latent, 0, seed, cfg.fourier_seed);
            let trunk = arch.network(4, 3 * arch.latent, DeepOnet::TIME_COLUMN, cfg.seed_for(streams::TRUNK_INIT), cfg.fourier_seed);
            Learner::deeponet(DeepOnet::new(branch, trunk)?, cfg.adam)
        }
    };
    let label = cfg.unified_variant.name().to_string();
    let (learner, report) = fit_positions(cfg, set, learner, &scaling, &samples, &targets, label, |s| set.position(s))?;
    let backbone = match cfg.unified_variant {
        UnifiedVariant::CoupledMlp => UnifiedBackbone::Coupled(learner.into_network()),
        UnifiedVariant::DeepOnet => UnifiedBackbone::DeepOnet(learner.into_deeponet()),
    };
    Ok((UnifiedModel { backbone, input: set.input.clone(), output: scaling }, report))
}

#[allow(clippy::too_many_arguments)]
fn fit_positions(
    cfg: &TrainConfig,
    set: &TrainingSet,
    mut learner: Learner,
    scaling: &OutputScaling,
    samples: &[SampleIndex],
    targets: &[Vec3],
    label: String,
    target_of: impl Fn(&SampleIndex) -> Vec3,
) -> Result<(Learner, TrainReport)> {
    let rows = set.node_rows(samples);
    let val_samples = set.val_samples(cfg.val_ratio)?;
    let val_rows = set.node_rows(&val_samples);
    let val_targets: Vec<Vec3> = val_samples.iter().map(target_of).collect();
    let loss = mse_loss(scaling, targets);
    let mut val = |l: &Learner| mse_of(l, scaling, &val_rows, &val_targets);
    let spec = FitSpec { label, epochs: cfg.epochs, batch_size: cfg.batch_size, shuffle_seed: cfg.seed_for(streams::SHUFFLE), lr: cfg.adam.lr, schedule: cfg.lr_schedule, rows: &rows };
    let report = fit(&mut learner, &spec, &loss, &mut val)?;
    Ok((learner, report))
}

/// One component learned, the other taken from labels. The validation loss
/// equals the total-field MSE of the oracle reconstruction.
pub fn train_oracle(kind: OracleKind, cfg: &TrainConfig, set: &TrainingSet) -> Result<(OracleModel, TrainReport)> {
    cfg.validate()?;
    let samples = set.train_samples(cfg.ratio, cfg.seed_for(streams::SUBSAMPLE))?;
    let mats: Vec<Vec<Mat3>> = set.labels.iter().map(|l| l.rotations.iter().map(|q| crate::kinematics::quat_to_matrix(*q)).collect()).collect();
    let x = set.x_init();
    let target_of = |s: &SampleIndex| match kind {
        OracleKind::Deformation => set.residual(s),
        OracleKind::Rigid => {
            let l = &set.labels[s.scenario as usize];
            rigid_point(&mats[s.scenario as usize][s.time as usize], l.centroid, l.translations[s.time as usize], x[s.node as usize])
        }
    };
    let targets: Vec<Vec3> = samples.iter().map(target_of).collect();
    let scaling = match kind {
        OracleKind::Deformation => field_scaling(set, |s| set.labels[s].residuals.clone())?,
        OracleKind::Rigid => field_scaling(set, |s| label_rigid_positions(x, &set.labels[s]))?,
    };
    let mut model = OracleModel::new(kind, cfg.oracle.network(8, 3, 3, cfg.seed_for(streams::ORACLE_INIT), cfg.fourier_seed), set.input.clone())?;
    model.output = scaling.clone();
    let learner = Learner::mlp(model.net.clone(), cfg.adam);
    let (learner, report) = fit_positions(cfg, set, learner, &scaling, &samples, &targets, kind.name().into(), target_of)?;
    model.net = learner.into_network();
    Ok((model, report))
}

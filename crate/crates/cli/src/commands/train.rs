use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use crashdecomp::models::{OracleKind, RotationMode, UnifiedVariant};
use crashdecomp::training::{train_oracle, train_strategy, train_unified, Strategy, TrainConfig, TrainReport, TrainingSet};
use serde::{Deserialize, Serialize};

use super::{load_dataset, load_labels, Ctx};
use crate::manifest::resolve;

pub const RIGID_CKPT: &str = "rigid.ckpt";
pub const DEFORM_CKPT: &str = "deformation.ckpt";
pub const MODEL_CKPT: &str = "model.ckpt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// RigidNet plus DeformationNet.
    Proposed,
    CoupledMlp,
    Deeponet,
    /// Learned residual on top of label rigid motion.
    OracleDeform,
    /// Learned rigid-mapped positions plus label residuals.
    OracleRigid,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Proposed => "proposed",
            ModelKind::CoupledMlp => "coupled-mlp",
            ModelKind::Deeponet => "deeponet",
            ModelKind::OracleDeform => "oracle-deform",
            ModelKind::OracleRigid => "oracle-rigid",
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    dataset: PathBuf,
    /// Labels directory from extract-labels; extracted in memory when omitted.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "proposed")]
    model: ModelKind,
    /// D, E or F (proposed model only).
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// RigidNet epochs of strategy F.
    #[arg(long)]
    stage1_epochs: Option<usize>,
    /// Fraction of training (scenario, time, node) triples.
    #[arg(long)]
    ratio: Option<f64>,
    /// Fraction of validation triples scored each epoch.
    #[arg(long)]
    val_ratio: Option<f64>,
    /// euler, quaternion or quaternion-incremental.
    #[arg(long)]
    rotation_mode: Option<RotationMode>,
    /// Output run directory [default: <output-root>/train-<model>-s<seed>].
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn resolve_train_config(ctx: &Ctx, a: &Args) -> Result<TrainConfig> {
    let mut cfg: TrainConfig = resolve(&TrainConfig::default(), ctx.config.as_ref(), "train")?;
    if let Some(v) = a.strategy {
        cfg.strategy = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.stage1_epochs {
        cfg.stage1_epochs = v;
    }
    if let Some(v) = a.ratio {
        cfg.ratio = v;
    }
    if let Some(v) = a.val_ratio {
        cfg.val_ratio = v;
    }
    if let Some(v) = a.rotation_mode {
        cfg.rotation_mode = v;
    }
    match a.model {
        ModelKind::CoupledMlp => cfg.unified_variant = UnifiedVariant::CoupledMlp,
        ModelKind::Deeponet => cfg.unified_variant = UnifiedVariant::DeepOnet,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(ctx: &Ctx, a: Args) -> Result<()> {
    let cfg = resolve_train_config(ctx, &a)?;
    let ds = load_dataset(&a.dataset)?;
    let labels = load_labels(a.labels.as_deref(), &ds, ctx.jobs)?;
    let set = TrainingSet::with_labels(&ds, labels)?;
    let stage = ctx.stage(a.out.as_deref(), &format!("train-{}-s{}", a.model.name(), cfg.seed))?;
    let dir = stage.path();
    let context = || format!("training {} (seed {})", a.model.name(), cfg.seed);
    let report: TrainReport = match a.model {
        ModelKind::Proposed => {
            let out = train_strategy(&cfg, &set).with_context(context)?;
            out.model.rigid.save(&dir.join(RIGID_CKPT))?;
            out.model.deform.save(&dir.join(DEFORM_CKPT))?;
            if let Some(r1) = &out.stage1 {
                r1.write(dir, "stage1")?;
            }
            out.report
        }
        ModelKind::CoupledMlp | ModelKind::Deeponet => {
            let (model, report) = train_unified(&cfg, &set).with_context(context)?;
            model.save(&dir.join(MODEL_CKPT))?;
            report
        }
        ModelKind::OracleDeform | ModelKind::OracleRigid => {
            let (kind, file) = match a.model {
                ModelKind::OracleDeform => (OracleKind::Deformation, DEFORM_CKPT),
                _ => (OracleKind::Rigid, RIGID_CKPT),
            };
            let (model, report) = train_oracle(kind, &cfg, &set).with_context(context)?;
            model.save(&dir.join(file))?;
            // The oracle reconstruction needs the labels at prediction time.
            let reference = serde_json::json!({
                "labels": a.labels,
                "dataset": a.dataset,
                "extracted_in_memory": a.labels.is_none(),
            });
            std::fs::write(dir.join("labels_ref.json"), serde_json::to_string_pretty(&reference)?)?;
            report
        }
    };
    report.write(dir, "report")?;
    let summary = report.summary();
    let config = serde_json::json!({ "model": a.model, "train": cfg });
    let seeds = BTreeMap::from([("train".to_string(), cfg.seed), ("fourier".to_string(), cfg.fourier_seed), ("dataset".to_string(), ds.seed)]);
    let mut inputs = vec![("dataset", a.dataset.as_path())];
    if let Some(l) = &a.labels {
        inputs.push(("labels", l.as_path()));
    }
    let m = stage.commit("train", config, seeds, ctx.inputs(&inputs))?;
    match summary.best_val_loss {
        Some(v) => println!("{}: best val loss {v:e} at epoch {} -> {}", summary.label, summary.best_epoch.unwrap_or(0), m.output.display()),
        None => println!("{}: no epochs run -> {}", summary.label, m.output.display()),
    }
    Ok(())
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use crashdecomp::models::UnifiedVariant;
use crashdecomp::training::{sweep, SweepPoint, SweepRun, SweepSpace, SweepStats, TrainConfig, TrainingSet};
use serde::Serialize;

use super::{load_dataset, load_labels, Ctx};
use crate::manifest::resolve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    CoupledMlp,
    Deeponet,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// JSON search space with keys depth, hidden, latent, activation, M, sigma.
    #[arg(long)]
    space: Option<PathBuf>,
    /// Number of LHS configurations.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, value_enum, default_value = "coupled-mlp")]
    variant: Variant,
    /// Seed of the configuration design; training seeds come from the config.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    val_ratio: Option<f64>,
    /// Output directory [default: <output-root>/sweep-<variant>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunEntry<'a> {
    index: usize,
    point: &'a SweepPoint,
    best_val_loss: Option<f64>,
    generalization_gap: Option<f64>,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct Summary<'a> {
    variant: UnifiedVariant,
    requested: usize,
    stats: &'a SweepStats,
    runs: Vec<RunEntry<'a>>,
    failures: Vec<RunEntry<'a>>,
}

fn entry(r: &SweepRun) -> RunEntry<'_> {
    let s = r.summary.as_ref();
    RunEntry {
        index: r.index,
        point: &r.point,
        best_val_loss: s.and_then(|s| s.best_val_loss),
        generalization_gap: s.and_then(|s| s.generalization_gap),
        error: r.error.as_deref(),
    }
}

pub fn run(ctx: &Ctx, a: Args) -> Result<()> {
    let mut space: SweepSpace = resolve(&SweepSpace::default(), ctx.config.as_ref(), "space")?;
    if let Some(p) = &a.space {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading sweep space {}", p.display()))?;
        space = serde_json::from_str(&text).with_context(|| format!("parsing sweep space {}", p.display()))?;
    }
    let mut cfg: TrainConfig = resolve(&TrainConfig::default(), ctx.config.as_ref(), "train")?;
    cfg.unified_variant = match a.variant {
        Variant::CoupledMlp => UnifiedVariant::CoupledMlp,
        Variant::Deeponet => UnifiedVariant::DeepOnet,
    };
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.ratio {
        cfg.ratio = v;
    }
    if let Some(v) = a.val_ratio {
        cfg.val_ratio = v;
    }
    cfg.validate()?;
    space.validate(cfg.unified_variant)?;

    let ds = load_dataset(&a.dataset)?;
    let labels = load_labels(a.labels.as_deref(), &ds, ctx.jobs)?;
    let set = TrainingSet::with_labels(&ds, labels)?;
    let stage = ctx.stage(a.out.as_deref(), &format!("sweep-{}", cfg.unified_variant.name()))?;
    let outcome = sweep(&space, a.n, a.seed, &cfg, &set, ctx.jobs)?;
    let dir = stage.path();
    for r in &outcome.runs {
        let sub = dir.join(format!("run_{:03}", r.index));
        std::fs::create_dir_all(&sub)?;
        std::fs::write(sub.join("point.json"), serde_json::to_string_pretty(&r.point)?)?;
        match (&r.report, &r.error) {
            (Some(rep), _) => rep.write(&sub, "report")?,
            (None, Some(e)) => std::fs::write(sub.join("error.txt"), e)?,
            (None, None) => {}
        }
    }
    let mut csv = String::from("epoch,min_val_loss\n");
    for (e, v) in outcome.envelope.iter().enumerate() {
        let _ = writeln!(csv, "{},{v:e}", e + 1);
    }
    std::fs::write(dir.join("envelope.csv"), csv)?;
    let summary = Summary {
        variant: outcome.variant,
        requested: a.n,
        stats: &outcome.stats,
        runs: outcome.runs.iter().map(entry).collect(),
        failures: outcome.runs.iter().filter(|r| r.error.is_some()).map(entry).collect(),
    };
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;

    let config = serde_json::json!({ "space": space, "n": a.n, "design_seed": a.seed, "train": cfg });
    let seeds = BTreeMap::from([("design".to_string(), a.seed), ("train".to_string(), cfg.seed), ("dataset".to_string(), ds.seed)]);
    let mut inputs = vec![("dataset", a.dataset.as_path())];
    if let Some(l) = &a.labels {
        inputs.push(("labels", l.as_path()));
    }
    if let Some(s) = &a.space {
        inputs.push(("space", s.as_path()));
    }
    let stats = outcome.stats.clone();
    let m = stage.commit("sweep", config, seeds, ctx.inputs(&inputs))?;
    println!("sweep: {} completed, {} failed -> {}", stats.completed, stats.failed, m.output.display());
    if stats.completed == 0 && a.n > 0 {
        bail!("all {} sweep runs failed; see {}", stats.failed, m.output.join("summary.json").display());
    }
    Ok(())
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use crashdecomp::landscape::{
    landscape_2d, pairwise_connectivity, random_plane_directions, write_connectivity, write_surface, LandscapeGrid, LossProbe, PlaneConfig,
};
use crashdecomp::training::TrainingSet;
use serde::Serialize;

use super::{load_dataset, load_labels, Ctx, TrainedModel, TrainedRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
pub enum Mode {
    /// Loss over a filter-normalized random plane around one checkpoint.
    #[value(name = "2d")]
    #[serde(rename = "2d")]
    Plane,
    /// Linear interpolation between every pair of checkpoints.
    #[value(name = "1d")]
    #[serde(rename = "1d")]
    Pairwise,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Train run directories: one for 2d, at least two for 1d.
    #[arg(long, num_args = 1.., required = true)]
    checkpoints: Vec<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Grid points per axis (2d).
    #[arg(long, default_value_t = 25)]
    resolution: usize,
    /// Half-width of both plane axes (2d).
    #[arg(long, default_value_t = 1.0)]
    range: f64,
    /// Direction seed (2d).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Interpolation points per pair, endpoints included (1d).
    #[arg(long, default_value_t = 25)]
    samples: usize,
    /// Fraction of training triples scored per loss evaluation.
    #[arg(long, default_value_t = 0.01)]
    train_ratio: f64,
    /// Fraction of validation triples scored per loss evaluation.
    #[arg(long, default_value_t = 0.05)]
    val_ratio: f64,
    /// Seed of the training-triple subsample.
    #[arg(long, default_value_t = 0)]
    sample_seed: u64,
    /// Output directory [default: <output-root>/landscape-<mode>].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn matrix_csv(g: &LandscapeGrid, values: &[Option<f64>]) -> String {
    let mut s = String::from("alpha\\beta");
    for b in &g.betas {
        let _ = write!(s, ",{b}");
    }
    s.push('\n');
    for (i, a) in g.alphas.iter().enumerate() {
        let _ = write!(s, "{a}");
        for j in 0..g.betas.len() {
            match values[g.index(i, j)] {
                Some(v) => write!(s, ",{v:e}"),
                None => write!(s, ","),
            }
            .expect("write to string");
        }
        s.push('\n');
    }
    s
}

fn probe_for(run: &TrainedRun, set: &TrainingSet, a: &Args) -> Result<LossProbe> {
    let train = set.train_samples(a.train_ratio, a.sample_seed)?;
    let val = set.val_samples(a.val_ratio)?;
    Ok(match &run.model {
        TrainedModel::Proposed(m) => LossProbe::stage2(m, set, &train, &val)?,
        TrainedModel::Unified(m) => LossProbe::unified(m, set, &train, &val),
        TrainedModel::Oracle(_) => bail!("{} holds an oracle model; landscapes cover proposed and unified models", run.dir.display()),
    })
}

fn params_of(probe: &LossProbe, run: &TrainedRun) -> Result<Vec<f64>> {
    let p = match &run.model {
        TrainedModel::Proposed(m) => probe.stage2_params(m),
        TrainedModel::Unified(m) => probe.unified_params(m),
        TrainedModel::Oracle(_) => bail!("{} holds an oracle model", run.dir.display()),
    };
    p.with_context(|| format!("checkpoint {} is not comparable with {}", run.dir.display(), "the first checkpoint"))
}

pub fn run(ctx: &Ctx, a: Args) -> Result<()> {
    match a.mode {
        Mode::Plane if a.checkpoints.len() != 1 => bail!("--mode 2d takes exactly one checkpoint, got {}", a.checkpoints.len()),
        Mode::Pairwise if a.checkpoints.len() < 2 => bail!("--mode 1d needs at least two checkpoints"),
        _ => {}
    }
    let runs = a.checkpoints.iter().map(|p| TrainedRun::load(p)).collect::<Result<Vec<_>>>()?;
    let ds_dir = runs[0].dataset_dir(a.dataset.as_deref())?;
    let ds = load_dataset(&ds_dir)?;
    let labels_dir = if a.dataset.is_some() { None } else { runs[0].labels_dir() };
    let labels = load_labels(labels_dir, &ds, ctx.jobs)?;
    let set = TrainingSet::with_labels(&ds, labels)?;
    let probe = probe_for(&runs[0], &set, &a)?;
    let mode_name = match a.mode {
        Mode::Plane => "2d",
        Mode::Pairwise => "1d",
    };
    let stage = ctx.stage(a.out.as_deref(), &format!("landscape-{mode_name}"))?;
    let dir = stage.path();
    let mut config = serde_json::json!({
        "mode": a.mode,
        "train_ratio": a.train_ratio,
        "val_ratio": a.val_ratio,
        "sample_seed": a.sample_seed,
    });
    let mut seeds = BTreeMap::from([("sample".to_string(), a.sample_seed), ("dataset".to_string(), ds.seed)]);
    match a.mode {
        Mode::Plane => {
            let w = params_of(&probe, &runs[0])?;
            let dirs = random_plane_directions(&w, &probe.param_blocks(), a.seed)?;
            let cfg = PlaneConfig { alpha: (-a.range, a.range), beta: (-a.range, a.range), resolution: (a.resolution, a.resolution), jobs: ctx.jobs };
            let train = |p: &[f64]| probe.train_loss(p);
            let val = |p: &[f64]| probe.val_loss(p);
            let grid = landscape_2d(&train, &val, &w, &dirs.delta, &dirs.xi, &cfg)?;
            write_surface(dir, &grid, &dirs, &cfg)?;
            std::fs::write(dir.join("train_loss.csv"), matrix_csv(&grid, &grid.train))?;
            std::fs::write(dir.join("val_loss.csv"), matrix_csv(&grid, &grid.val))?;
            std::fs::write(dir.join("abs_diff.csv"), matrix_csv(&grid, &grid.abs_diff))?;
            config["plane"] = serde_json::to_value(&cfg)?;
            seeds.insert("directions".into(), a.seed);
            println!("{}x{} plane, {} missing cells", a.resolution, a.resolution, grid.n_missing());
        }
        Mode::Pairwise => {
            let ws = runs.iter().map(|r| params_of(&probe, r)).collect::<Result<Vec<_>>>()?;
            let loss = |p: &[f64]| probe.train_loss(p);
            let c = pairwise_connectivity(&ws, &loss, a.samples, ctx.jobs)?;
            write_connectivity(dir, &c)?;
            config["samples"] = a.samples.into();
            match c.mean_barrier() {
                Some(b) => println!("{} curves, mean barrier {b:e}", c.curves.len()),
                None => println!("{} curves, no finite barrier", c.curves.len()),
            }
        }
    }
    let mut inputs: Vec<(String, &Path)> = a.checkpoints.iter().enumerate().map(|(i, p)| (format!("checkpoint_{i}"), p.as_path())).collect();
    inputs.push(("dataset".into(), ds_dir.as_path()));
    let pairs: Vec<(&str, &Path)> = inputs.iter().map(|(k, p)| (k.as_str(), *p)).collect();
    let m = stage.commit("landscape", config, seeds, ctx.inputs(&pairs))?;
    println!("-> {}", m.output.display());
    Ok(())
}

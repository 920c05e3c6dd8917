use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use crashdecomp::data::{Dataset, Split, EXTRAP_VELOCITY};
use crashdecomp::evaluation::{evaluate_suite, stft_spectrogram, MetricKind, ScenarioFields, Spectrogram, STFT_HOP, STFT_WINDOW};
use crashdecomp::kinematics::DecompositionLabels;
use crashdecomp::models::{label_rigid_positions, OracleKind};
use crashdecomp::Vec3;
use serde::Serialize;

use super::{load_dataset, load_labels, par_map, Ctx, TrainedModel, TrainedRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalSplit {
    Train,
    Interp,
    /// Extrapolation cases at 46..53 degrees.
    ExtrapAngle,
    /// The high-velocity extrapolation case.
    ExtrapVelocity,
    /// Every extrapolation case.
    Extrap,
}

impl EvalSplit {
    pub fn name(self) -> &'static str {
        match self {
            EvalSplit::Train => "train",
            EvalSplit::Interp => "interp",
            EvalSplit::ExtrapAngle => "extrap-angle",
            EvalSplit::ExtrapVelocity => "extrap-velocity",
            EvalSplit::Extrap => "extrap",
        }
    }

    pub fn scenarios(self, ds: &Dataset) -> Vec<usize> {
        let velocity_case = |k: &usize| ds.trajectories[*k].scenario.v == EXTRAP_VELOCITY;
        match self {
            EvalSplit::Train => ds.split_indices(Split::Train),
            EvalSplit::Interp => ds.split_indices(Split::Interp),
            EvalSplit::Extrap => ds.split_indices(Split::Extrap),
            EvalSplit::ExtrapAngle => ds.split_indices(Split::Extrap).into_iter().filter(|k| !velocity_case(k)).collect(),
            EvalSplit::ExtrapVelocity => ds.split_indices(Split::Extrap).into_iter().filter(velocity_case).collect(),
        }
    }
}

/// Command-line metric names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMetric {
    Suite(MetricKind),
    Stft,
}

pub const METRIC_NAMES: [&str; 5] = ["rmse", "dircorr", "iou", "phases", "stft"];

impl FromStr for EvalMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.trim() {
            "rmse" => EvalMetric::Suite(MetricKind::Rmse),
            "dircorr" => EvalMetric::Suite(MetricKind::DirectionalConsistency),
            "iou" => EvalMetric::Suite(MetricKind::Iou),
            "phases" => EvalMetric::Suite(MetricKind::Magnitude),
            "stft" => EvalMetric::Stft,
            other => return Err(format!("unknown metric {other:?}; valid names: {}", METRIC_NAMES.join(", "))),
        })
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory of a finished train run.
    #[arg(long)]
    run: PathBuf,
    #[arg(long, value_enum, default_value = "interp")]
    split: EvalSplit,
    /// Comma-separated subset of rmse, dircorr, iou, phases, stft.
    #[arg(long, default_value = "rmse,dircorr,iou,phases,stft", value_delimiter = ',')]
    metrics: Vec<EvalMetric>,
    /// Dataset to evaluate on instead of the one the run was trained on.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output directory [default: <output-root>/eval-<run>-<split>].
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn predict_fields(run: &TrainedRun, ds: &Dataset, labels: &[DecompositionLabels], ids: &[usize], jobs: usize) -> Result<Vec<ScenarioFields>> {
    par_map(ids.len(), jobs, |j| {
        let k = ids[j];
        let traj = &ds.trajectories[k];
        let x = &traj.x_init;
        let eta = traj.scenario.eta();
        let l = &labels[k];
        let mut f = ScenarioFields {
            id: k,
            x_init: x.clone(),
            target: traj.positions.clone(),
            truth_deformation: Some(l.residuals.clone()),
            ..Default::default()
        };
        match &run.model {
            TrainedModel::Proposed(m) => {
                let p = m.predict(x, eta, &traj.grid)?;
                f.total = p.total;
                f.rigid = Some(p.rigid_positions);
                f.deformation = Some(p.deformation);
            }
            TrainedModel::Unified(m) => f.total = m.predict_trajectory(x, eta, &traj.grid)?,
            TrainedModel::Oracle(m) => {
                let y = m.predict_trajectory(x, eta, &traj.grid)?;
                let (rigid, deformation) = match m.kind {
                    OracleKind::Deformation => (label_rigid_positions(x, l), y),
                    OracleKind::Rigid => (y, l.residuals.clone()),
                };
                f.total = rigid.iter().zip(&deformation).map(|(p, d)| [p[0] + d[0], p[1] + d[1], p[2] + d[2]]).collect();
                f.rigid = Some(rigid);
                f.deformation = Some(deformation);
            }
        }
        Ok(f)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()
    .with_context(|| format!("predicting with the model in {}", run.dir.display()))
}

/// Mean deformation norm over the front-zone nodes at every step.
pub fn front_zone_signal(field: &[Vec3], front: &[bool]) -> Vec<f64> {
    let n = front.len();
    let count = front.iter().filter(|&&b| b).count().max(1) as f64;
    field
        .chunks_exact(n)
        .map(|frame| frame.iter().zip(front).filter(|(_, &b)| b).map(|(d, _)| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()).sum::<f64>() / count)
        .collect()
}

fn spectrogram_csv(s: &Spectrogram) -> String {
    let mut out = String::from("t");
    for f in &s.frequencies {
        let _ = write!(out, ",{f}");
    }
    out.push('\n');
    for i in 0..s.n_frames() {
        let _ = write!(out, "{}", s.times[i]);
        for v in s.frame(i) {
            let _ = write!(out, ",{v:e}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct SpectralSummary {
    predicted_dominant_hz: f64,
    truth_dominant_hz: f64,
}

fn write_stft(dir: &Path, fields: &[ScenarioFields], ds: &Dataset) -> Result<()> {
    let sub = dir.join("stft");
    std::fs::create_dir_all(&sub)?;
    let front = &ds.mesh.front_mask;
    let dt = ds.grid.dt;
    let mut summary = BTreeMap::new();
    for f in fields {
        let Some(pred) = &f.deformation else {
            bail!("metric stft needs a decomposed model; scenario {} has no deformation field", f.id);
        };
        let truth = f.truth_deformation.as_deref().unwrap_or_default();
        let sp = stft_spectrogram(&front_zone_signal(pred, front), dt, STFT_WINDOW, STFT_HOP)?;
        let st = stft_spectrogram(&front_zone_signal(truth, front), dt, STFT_WINDOW, STFT_HOP)?;
        std::fs::write(sub.join(format!("scenario_{:03}_pred.csv", f.id)), spectrogram_csv(&sp))?;
        std::fs::write(sub.join(format!("scenario_{:03}_truth.csv", f.id)), spectrogram_csv(&st))?;
        summary.insert(f.id, SpectralSummary { predicted_dominant_hz: sp.dominant_frequency(), truth_dominant_hz: st.dominant_frequency() });
    }
    std::fs::write(sub.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

pub fn run(ctx: &Ctx, a: Args) -> Result<()> {
    let run = TrainedRun::load(&a.run)?;
    let ds_dir = run.dataset_dir(a.dataset.as_deref())?;
    let ds = load_dataset(&ds_dir)?;
    let labels_dir = if a.dataset.is_some() { None } else { run.labels_dir() };
    let labels = load_labels(labels_dir, &ds, ctx.jobs)?;
    let ids = a.split.scenarios(&ds);
    if ids.is_empty() {
        bail!("dataset {} has no {} scenarios", ds_dir.display(), a.split.name());
    }
    let mut suite: Vec<MetricKind> = Vec::new();
    let mut stft = false;
    for m in &a.metrics {
        match *m {
            EvalMetric::Suite(k) if !suite.contains(&k) => suite.push(k),
            EvalMetric::Stft => stft = true,
            _ => {}
        }
    }
    let run_name = a.run.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    let stage = ctx.stage(a.out.as_deref(), &format!("eval-{run_name}-{}", a.split.name()))?;
    let fields = predict_fields(&run, &ds, &labels, &ids, ctx.jobs)?;
    let bundle = evaluate_suite(&fields, &ds.grid, &suite).context("evaluating metrics")?;
    bundle.write(stage.path())?;
    if stft {
        write_stft(stage.path(), &fields, &ds)?;
    }
    std::fs::write(stage.path().join("scenarios.json"), serde_json::to_string_pretty(&ids)?)?;
    let metric_names: Vec<&str> = a
        .metrics
        .iter()
        .map(|m| match m {
            EvalMetric::Suite(k) => k.name(),
            EvalMetric::Stft => "stft",
        })
        .collect();
    let config = serde_json::json!({ "split": a.split, "metrics": metric_names, "model": run.kind });
    let mut seeds = run.manifest.seeds.clone();
    seeds.insert("dataset".into(), ds.seed);
    let m = stage.commit("eval", config, seeds, ctx.inputs(&[("run", &a.run), ("dataset", &ds_dir)]))?;
    println!("evaluated {} {} scenarios -> {}", ids.len(), a.split.name(), m.output.display());
    for (name, s) in bundle.summary() {
        println!("  {name}: mean {:e} std {:e}", s.mean, s.std);
    }
    Ok(())
}

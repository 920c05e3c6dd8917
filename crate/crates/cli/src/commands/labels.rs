use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use crashdecomp::data::Split;
use crashdecomp::kinematics::write_labels;
use serde::Serialize;

use super::{label_stem, load_dataset, load_labels, Ctx};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    dataset: PathBuf,
    /// Output labels directory [default: <output-root>/labels].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ScenarioSummary {
    id: usize,
    split: Split,
    max_residual_norm: f64,
}

#[derive(Debug, Serialize)]
struct Summary {
    n_scenarios: usize,
    max_residual_norm: f64,
    scenarios: Vec<ScenarioSummary>,
}

pub fn run(ctx: &Ctx, a: Args) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let stage = ctx.stage(a.out.as_deref(), "labels")?;
    let labels = load_labels(None, &ds, ctx.jobs)?;
    let mut scenarios = Vec::with_capacity(labels.len());
    for (k, l) in labels.iter().enumerate() {
        write_labels(stage.path(), &label_stem(k), l).with_context(|| format!("writing labels of scenario {k}"))?;
        scenarios.push(ScenarioSummary { id: k, split: ds.trajectories[k].scenario.split, max_residual_norm: l.max_residual_norm() });
    }
    let max = scenarios.iter().map(|s| s.max_residual_norm).fold(0.0, f64::max);
    let summary = Summary { n_scenarios: scenarios.len(), max_residual_norm: max, scenarios };
    std::fs::write(stage.path().join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    let config = serde_json::json!({ "dataset_seed": ds.seed, "n_nodes": ds.n_nodes() });
    let seeds = BTreeMap::from([("dataset".to_string(), ds.seed)]);
    let m = stage.commit("extract-labels", config, seeds, ctx.inputs(&[("dataset", &a.dataset)]))?;
    println!("extracted labels for {} scenarios into {}; max |D*| = {max:e} m", labels.len(), m.output.display());
    Ok(())
}

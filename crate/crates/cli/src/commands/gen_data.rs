use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use crashdecomp::data::{generate_dataset, write_dataset, GeneratorConfig, TimeGrid};
use serde::{Deserialize, Serialize};

use super::Ctx;
use crate::manifest::resolve;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Output dataset directory [default: <output-root>/dataset].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mesh nodes per vehicle.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Simulated duration in seconds.
    #[arg(long)]
    t_end: Option<f64>,
    /// Peak deformation amplitude in meters; 0 gives pure rigid motion.
    #[arg(long)]
    amplitude: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSettings {
    pub nodes: usize,
    pub seed: u64,
    pub steps: usize,
    pub t_end: f64,
}

impl Default for DataSettings {
    fn default() -> Self {
        let g = TimeGrid::default();
        Self { nodes: 500, seed: 0, steps: g.n_steps, t_end: g.t_end }
    }
}

pub fn run(ctx: &Ctx, a: Args) -> Result<()> {
    let mut data: DataSettings = resolve(&DataSettings::default(), ctx.config.as_ref(), "data")?;
    let mut generator: GeneratorConfig = resolve(&GeneratorConfig::default(), ctx.config.as_ref(), "generator")?;
    data.nodes = a.nodes.unwrap_or(data.nodes);
    data.seed = a.seed.unwrap_or(data.seed);
    data.steps = a.steps.unwrap_or(data.steps);
    data.t_end = a.t_end.unwrap_or(data.t_end);
    generator.deformation_amplitude = a.amplitude.unwrap_or(generator.deformation_amplitude);

    let grid = TimeGrid::new(data.t_end, data.steps)?;
    let stage = ctx.stage(a.out.as_deref(), "dataset")?;
    let ds = generate_dataset(data.nodes, data.seed, grid, generator).context("generating dataset")?;
    write_dataset(stage.path(), &ds).with_context(|| format!("writing dataset to {}", stage.target().display()))?;
    let config = serde_json::json!({ "data": data, "generator": generator });
    let seeds = BTreeMap::from([("dataset".to_string(), data.seed)]);
    let m = stage.commit("gen-data", config, seeds, ctx.inputs(&[]))?;
    println!("wrote {} scenarios with {} nodes to {}", ds.len(), ds.n_nodes(), m.output.display());
    Ok(())
}

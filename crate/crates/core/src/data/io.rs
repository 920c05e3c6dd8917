use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_mesh, default_splits, synth_trajectory_with, GeneratorConfig, Mesh, Scenario, Split,
    SyntheticGroundTruth, TimeGrid, Trajectory,
};
use crate::blob;
use crate::kinematics::Quaternion;
use crate::{Error, Result};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Generated scenarios with their trajectories and constructed decompositions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub mesh: Mesh,
    pub grid: TimeGrid,
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub trajectories: Vec<Trajectory>,
    pub truths: Vec<SyntheticGroundTruth>,
}

impl Dataset {
    pub fn n_nodes(&self) -> usize {
        self.mesh.n_nodes()
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn scenarios(&self) -> Vec<Scenario> {
        self.trajectories.iter().map(|t| t.scenario).collect()
    }

    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.trajectories[i].scenario.split == split).collect()
    }
}

/// Meshes `n_nodes` nodes and generates every scenario of `default_splits(seed)`.
pub fn generate_dataset(n_nodes: usize, seed: u64, grid: TimeGrid, generator: GeneratorConfig) -> Result<Dataset> {
    generate_scenarios(&default_splits(seed), n_nodes, seed, grid, generator)
}

pub fn generate_scenarios(
    scenarios: &[Scenario],
    n_nodes: usize,
    seed: u64,
    grid: TimeGrid,
    generator: GeneratorConfig,
) -> Result<Dataset> {
    let mesh = build_mesh(n_nodes)?;
    let mut trajectories = Vec::with_capacity(scenarios.len());
    let mut truths = Vec::with_capacity(scenarios.len());
    for (k, s) in scenarios.iter().enumerate() {
        let (t, g) = synth_trajectory_with(&generator, s, &mesh, &grid, seed.wrapping_add(k as u64))?;
        trajectories.push(t);
        truths.push(g);
    }
    Ok(Dataset { mesh, grid, seed, generator, trajectories, truths })
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioEntry {
    id: usize,
    #[serde(flatten)]
    scenario: Scenario,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    n_nodes: usize,
    grid: TimeGrid,
    seed: u64,
    generator: GeneratorConfig,
    mesh_length: f64,
    mesh_width: f64,
    mesh_height: f64,
    front_mask: Vec<bool>,
    scenarios: Vec<ScenarioEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthHeader {
    t_impact: f64,
    carrier_frequency: f64,
    support_mask: Vec<bool>,
}

pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    blob::create_dir(dir)?;
    let manifest = Manifest {
        format_version: DATASET_FORMAT_VERSION,
        n_nodes: ds.n_nodes(),
        grid: ds.grid,
        seed: ds.seed,
        generator: ds.generator,
        mesh_length: ds.mesh.length,
        mesh_width: ds.mesh.width,
        mesh_height: ds.mesh.height,
        front_mask: ds.mesh.front_mask.clone(),
        scenarios: ds.trajectories.iter().enumerate().map(|(id, t)| ScenarioEntry { id, scenario: t.scenario }).collect(),
    };
    blob::write_f64(&dir.join("mesh.f64"), blob::flatten_vec3(&ds.mesh.x_init))?;
    let x_init = ds.trajectories.first().map(|t| t.x_init.clone()).unwrap_or_default();
    blob::write_f64(&dir.join("x_init.f64"), blob::flatten_vec3(&x_init))?;
    for (k, (traj, truth)) in ds.trajectories.iter().zip(&ds.truths).enumerate() {
        blob::write_f64(&dir.join(format!("s{k}_traj.f64")), blob::flatten_vec3(&traj.positions))?;
        let header = TruthHeader {
            t_impact: truth.t_impact,
            carrier_frequency: truth.carrier_frequency,
            support_mask: truth.support_mask.clone(),
        };
        blob::write_json(&dir.join(format!("s{k}_truth.json")), &header)?;
        let values = truth
            .rotations
            .iter()
            .flat_map(|q| q.to_array())
            .chain(blob::flatten_vec3(&truth.translations))
            .chain(blob::flatten_vec3(&truth.deformation));
        blob::write_f64(&dir.join(format!("s{k}_truth.f64")), values)?;
    }
    // Index last: a directory with an index is complete.
    blob::write_json(&dir.join("dataset.json"), &manifest)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join("dataset.json");
    let m: Manifest = blob::read_json(&path)?;
    if m.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::format(
            &path,
            format!("dataset format version {} unsupported (expected {DATASET_FORMAT_VERSION})", m.format_version),
        ));
    }
    let (n, t) = (m.n_nodes, m.grid.n_steps);
    if m.front_mask.len() != n {
        return Err(Error::format(&path, format!("front mask has {} entries for {n} nodes", m.front_mask.len())));
    }
    let mesh_nodes = blob::to_vec3(&blob::read_f64(&dir.join("mesh.f64"), n * 3)?);
    let x_init = if m.scenarios.is_empty() {
        Vec::new()
    } else {
        blob::to_vec3(&blob::read_f64(&dir.join("x_init.f64"), n * 3)?)
    };
    let mesh = Mesh { x_init: mesh_nodes, front_mask: m.front_mask, length: m.mesh_length, width: m.mesh_width, height: m.mesh_height };
    let mut trajectories = Vec::with_capacity(m.scenarios.len());
    let mut truths = Vec::with_capacity(m.scenarios.len());
    for (k, entry) in m.scenarios.iter().enumerate() {
        if entry.id != k {
            return Err(Error::format(&path, format!("scenario {k} has id {}", entry.id)));
        }
        let positions = blob::to_vec3(&blob::read_f64(&dir.join(format!("s{k}_traj.f64")), t * n * 3)?);
        trajectories.push(Trajectory { x_init: x_init.clone(), positions, grid: m.grid, scenario: entry.scenario });
        let hpath = dir.join(format!("s{k}_truth.json"));
        let h: TruthHeader = blob::read_json(&hpath)?;
        if h.support_mask.len() != n {
            return Err(Error::format(&hpath, format!("support mask has {} entries for {n} nodes", h.support_mask.len())));
        }
        let v = blob::read_f64(&dir.join(format!("s{k}_truth.f64")), t * 7 + t * n * 3)?;
        let (q, rest) = v.split_at(t * 4);
        let (tr, d) = rest.split_at(t * 3);
        truths.push(SyntheticGroundTruth {
            rotations: q.chunks_exact(4).map(|c| Quaternion::new(c[0], c[1], c[2], c[3])).collect(),
            translations: blob::to_vec3(tr),
            deformation: blob::to_vec3(d),
            t_impact: h.t_impact,
            support_mask: h.support_mask,
            carrier_frequency: h.carrier_frequency,
        });
    }
    Ok(Dataset { mesh, grid: m.grid, seed: m.seed, generator: m.generator, trajectories, truths })
}

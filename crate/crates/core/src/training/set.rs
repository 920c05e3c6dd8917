use crate::data::{subsample, Dataset, ParamRanges, SampleIndex, Split};
use crate::kinematics::{extract_labels, DecompositionLabels};
use crate::models::InputNormalizer;
use crate::tensor_nn::Matrix;
use crate::{Error, Result, Vec3};

use super::config::streams;

/// A dataset with its extracted labels and the scenarios used for fitting
/// and for validation.
#[derive(Debug, Clone)]
pub struct TrainingSet<'a> {
    pub dataset: &'a Dataset,
    pub labels: Vec<DecompositionLabels>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub input: InputNormalizer,
    pub centroid: Vec3,
}

impl<'a> TrainingSet<'a> {
    /// Extracts labels for every scenario; fits on the training split and
    /// validates on the interpolation split.
    pub fn new(dataset: &'a Dataset) -> Result<Self> {
        let labels = dataset.trajectories.iter().map(extract_labels).collect::<Result<Vec<_>>>()?;
        Self::with_labels(dataset, labels)
    }

    pub fn with_labels(dataset: &'a Dataset, labels: Vec<DecompositionLabels>) -> Result<Self> {
        if labels.len() != dataset.len() {
            return Err(Error::Shape(format!("{} label sets for {} scenarios", labels.len(), dataset.len())));
        }
        let x_init = &dataset.trajectories.first().ok_or_else(|| Error::Missing("empty dataset".into()))?.x_init;
        let input = InputNormalizer::new(&ParamRanges::default(), dataset.grid.t_end, x_init);
        let centroid = labels[0].centroid;
        let set = Self {
            dataset,
            labels,
            train: dataset.split_indices(Split::Train),
            val: dataset.split_indices(Split::Interp),
            input,
            centroid,
        };
        if set.train.is_empty() || set.val.is_empty() {
            return Err(Error::Missing("dataset needs training and interpolation scenarios".into()));
        }
        Ok(set)
    }

    pub fn with_splits(mut self, train: Vec<usize>, val: Vec<usize>) -> Result<Self> {
        if train.is_empty() || val.is_empty() || train.iter().chain(&val).any(|&s| s >= self.dataset.len()) {
            return Err(Error::Config("training and validation scenario lists must be non-empty and in range".into()));
        }
        self.train = train;
        self.val = val;
        Ok(self)
    }

    pub fn x_init(&self) -> &[Vec3] {
        &self.dataset.trajectories[0].x_init
    }

    pub fn n_nodes(&self) -> usize {
        self.dataset.n_nodes()
    }

    pub fn n_steps(&self) -> usize {
        self.dataset.grid.n_steps
    }

    pub fn eta(&self, scenario: usize) -> [f64; 4] {
        self.dataset.trajectories[scenario].scenario.eta()
    }

    /// Subsampled triples over `scenarios`, with dataset scenario indices.
    pub fn samples(&self, scenarios: &[usize], ratio: f64, seed: u64) -> Result<Vec<SampleIndex>> {
        let set = subsample(scenarios.len(), self.n_steps(), self.n_nodes(), ratio, seed)?;
        Ok(set
            .indices
            .into_iter()
            .map(|s| SampleIndex { scenario: scenarios[s.scenario as usize] as u32, ..s })
            .collect())
    }

    pub fn train_samples(&self, ratio: f64, seed: u64) -> Result<Vec<SampleIndex>> {
        self.samples(&self.train, ratio, seed)
    }

    /// Validation triples; the same for every model and seed.
    pub fn val_samples(&self, ratio: f64) -> Result<Vec<SampleIndex>> {
        self.samples(&self.val, ratio, streams::VALIDATION)
    }

    pub fn node_rows(&self, samples: &[SampleIndex]) -> Matrix {
        let x = self.x_init();
        let mut m = Matrix::zeros(samples.len(), 8);
        for (r, s) in samples.iter().enumerate() {
            let t = self.dataset.grid.time(s.time as usize);
            self.input.node_row(x[s.node as usize], t, self.eta(s.scenario as usize), m.row_mut(r));
        }
        m
    }

    /// Normalized `[t, eta]` rows for every step of `scenarios`, scenario-major.
    pub fn rigid_rows(&self, scenarios: &[usize]) -> Matrix {
        let steps = self.n_steps();
        let mut m = Matrix::zeros(scenarios.len() * steps, 5);
        for (j, &s) in scenarios.iter().enumerate() {
            for k in 0..steps {
                self.input.rigid_row(self.dataset.grid.time(k), self.eta(s), m.row_mut(j * steps + k));
            }
        }
        m
    }

    pub fn position(&self, s: &SampleIndex) -> Vec3 {
        self.dataset.trajectories[s.scenario as usize].frame(s.time as usize)[s.node as usize]
    }

    pub fn residual(&self, s: &SampleIndex) -> Vec3 {
        self.labels[s.scenario as usize].residual(s.time as usize)[s.node as usize]
    }
}

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ArchConfig, FourierSpec, TrainConfig};
use super::report::{ReportSummary, TrainReport};
use super::set::TrainingSet;
use super::stages::train_unified;
use crate::data::lhs_unit;
use crate::models::UnifiedVariant;
use crate::tensor_nn::Activation;
use crate::{Error, Result};

/// Discrete hyperparameter grid for the unified baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpace {
    pub depth: Vec<usize>,
    pub hidden: Vec<usize>,
    /// DeepONet only.
    pub latent: Vec<usize>,
    pub activation: Vec<Activation>,
    #[serde(rename = "M")]
    pub mapping_size: Vec<usize>,
    pub sigma: Vec<f64>,
}

impl Default for SweepSpace {
    fn default() -> Self {
        Self {
            depth: vec![4, 6, 8, 10],
            hidden: vec![128, 256, 512],
            latent: vec![64, 128, 256],
            activation: Activation::ALL.to_vec(),
            mapping_size: vec![2, 4, 8, 16],
            sigma: vec![1.0, 10.0, 100.0],
        }
    }
}

impl SweepSpace {
    fn dims(&self, variant: UnifiedVariant) -> Vec<usize> {
        let mut d = vec![self.depth.len(), self.hidden.len(), self.activation.len(), self.mapping_size.len(), self.sigma.len()];
        if variant == UnifiedVariant::DeepOnet {
            d.push(self.latent.len());
        }
        d
    }

    pub fn cardinality(&self, variant: UnifiedVariant) -> usize {
        self.dims(variant).iter().product()
    }

    pub fn validate(&self, variant: UnifiedVariant) -> Result<()> {
        if self.dims(variant).contains(&0) {
            return Err(Error::Config("every sweep dimension needs at least one value".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub depth: usize,
    pub hidden: usize,
    pub latent: Option<usize>,
    pub activation: Activation,
    #[serde(rename = "M")]
    pub mapping_size: usize,
    pub sigma: f64,
}

impl SweepPoint {
    pub fn arch(&self) -> ArchConfig {
        let mut a = ArchConfig::new(self.depth, self.hidden)
            .with_activation(self.activation)
            .with_fourier(Some(FourierSpec { mapping_size: self.mapping_size, sigma: self.sigma }));
        if let Some(p) = self.latent {
            a.latent = p;
        }
        a
    }
}

/// Latin-hypercube design over the grid: each dimension's values are drawn
/// by stratified index, so every value appears `n / len` times (rounded).
pub fn sweep_points(space: &SweepSpace, variant: UnifiedVariant, n: usize, seed: u64) -> Result<Vec<SweepPoint>> {
    space.validate(variant)?;
    let dims = space.dims(variant);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |u: f64, len: usize| ((u * len as f64) as usize).min(len - 1);
    Ok(lhs_unit(n, dims.len(), &mut rng)
        .into_iter()
        .map(|u| SweepPoint {
            depth: space.depth[pick(u[0], dims[0])],
            hidden: space.hidden[pick(u[1], dims[1])],
            activation: space.activation[pick(u[2], dims[2])],
            mapping_size: space.mapping_size[pick(u[3], dims[3])],
            sigma: space.sigma[pick(u[4], dims[4])],
            latent: (variant == UnifiedVariant::DeepOnet).then(|| space.latent[pick(u[5], dims[5])]),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub index: usize,
    pub point: SweepPoint,
    pub summary: Option<ReportSummary>,
    #[serde(skip)]
    pub report: Option<TrainReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub completed: usize,
    pub failed: usize,
    pub best_val: Option<f64>,
    pub mean_val: Option<f64>,
    pub median_val: Option<f64>,
    pub best_gap: Option<f64>,
    pub mean_gap: Option<f64>,
    pub median_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub variant: UnifiedVariant,
    pub runs: Vec<SweepRun>,
    /// Minimum validation loss across runs at each epoch.
    pub envelope: Vec<f64>,
    pub stats: SweepStats,
}

/// Pointwise minimum over curves; shorter curves drop out past their end.
pub fn envelope(curves: &[Vec<f64>]) -> Vec<f64> {
    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|e| curves.iter().filter_map(|c| c.get(e)).copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min))
        .collect()
}

fn mean_median(mut v: Vec<f64>) -> (Option<f64>, Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None, None);
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    (Some(v[0]), Some(v.iter().sum::<f64>() / n as f64), Some(median))
}

/// Trains `n` unified models drawn from `space`, `jobs` at a time. A failed
/// run is recorded with its error and the sweep continues.
pub fn sweep(
    space: &SweepSpace,
    n: usize,
    seed: u64,
    base: &TrainConfig,
    set: &TrainingSet,
    jobs: usize,
) -> Result<SweepOutcome> {
    let variant = base.unified_variant;
    let points = sweep_points(space, variant, n, seed)?;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<SweepRun>>> = Mutex::new(vec![None; points.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(points.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= points.len() {
                    break;
                }
                let point = points[i];
                let cfg = TrainConfig { unified: point.arch(), ..base.clone() };
                let run = match train_unified(&cfg, set) {
                    Ok((_, report)) => SweepRun { index: i, point, summary: Some(report.summary()), report: Some(report), error: None },
                    Err(e) => {
                        log::warn!("sweep run {i} ({point:?}) failed: {e}");
                        SweepRun { index: i, point, summary: None, report: None, error: Some(e.to_string()) }
                    }
                };
                slots.lock().expect("sweep results lock")[i] = Some(run);
            });
        }
    });
    let runs: Vec<SweepRun> = slots.into_inner().expect("sweep results lock").into_iter().flatten().collect();
    let curves: Vec<Vec<f64>> = runs.iter().filter_map(|r| r.report.as_ref().map(TrainReport::val_curve)).collect();
    let best: Vec<f64> = runs.iter().filter_map(|r| r.summary.as_ref()?.best_val_loss).collect();
    let gaps: Vec<f64> = runs.iter().filter_map(|r| r.summary.as_ref()?.generalization_gap).collect();
    let (best_val, mean_val, median_val) = mean_median(best);
    let (best_gap, mean_gap, median_gap) = mean_median(gaps);
    let stats = SweepStats {
        completed: runs.iter().filter(|r| r.error.is_none()).count(),
        failed: runs.iter().filter(|r| r.error.is_some()).count(),
        best_val,
        mean_val,
        median_val,
        best_gap,
        mean_gap,
        median_gap,
    };
    Ok(SweepOutcome { variant, envelope: envelope(&curves), runs, stats })
}

impl SweepOutcome {
    /// `run_<i>.csv/json` per completed run, `envelope.csv` and `sweep.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        crate::blob::create_dir(dir)?;
        for r in &self.runs {
            if let Some(rep) = &r.report {
                rep.write(dir, &format!("run_{:03}", r.index))?;
            }
        }
        let mut csv = String::from("epoch,min_val_loss\n");
        for (e, v) in self.envelope.iter().enumerate() {
            let _ = writeln!(csv, "{},{v:e}", e + 1);
        }
        let p = dir.join("envelope.csv");
        std::fs::write(&p, csv).map_err(|e| Error::io(&p, e))?;
        crate::blob::write_json(&dir.join("sweep.json"), self)
    }
}

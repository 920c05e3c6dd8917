pub mod eval;
pub mod gen_data;
pub mod labels;
pub mod landscape;
pub mod sweep;
pub mod train;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use crashdecomp::data::{read_dataset, Dataset};
use crashdecomp::kinematics::{extract_labels, read_labels, DecompositionLabels};
use crashdecomp::models::{DeformationNetModel, OracleModel, ProposedModel, RigidNetModel, UnifiedModel};

use crate::manifest::{RunManifest, Staged};
pub use train::ModelKind;

pub struct Ctx {
    pub output_root: PathBuf,
    pub config: Option<serde_json::Value>,
    pub config_path: Option<PathBuf>,
    pub jobs: usize,
    pub overwrite: bool,
}

impl Ctx {
    pub fn new(output_root: PathBuf, config_path: Option<PathBuf>, jobs: usize, overwrite: bool) -> Result<Self> {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        let config = match &config_path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config file {}", p.display()))?;
                let v: serde_json::Value =
                    serde_json::from_str(&text).with_context(|| format!("parsing config file {}", p.display()))?;
                if !v.is_object() {
                    bail!("config file {} must hold a JSON object of sections", p.display());
                }
                Some(v)
            }
            None => None,
        };
        Ok(Self { output_root, config, config_path, jobs, overwrite })
    }

    pub fn stage(&self, explicit: Option<&Path>, default_name: &str) -> Result<Staged> {
        let dir = explicit.map(Path::to_path_buf).unwrap_or_else(|| self.output_root.join(default_name));
        Staged::new(&dir, self.overwrite)
    }

    pub fn inputs(&self, pairs: &[(&str, &Path)]) -> BTreeMap<String, PathBuf> {
        let mut m: BTreeMap<String, PathBuf> = pairs.iter().map(|(k, p)| (k.to_string(), p.to_path_buf())).collect();
        if let Some(c) = &self.config_path {
            m.insert("config".into(), c.clone());
        }
        m
    }
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    if !dir.is_dir() {
        bail!("dataset directory {} does not exist", dir.display());
    }
    read_dataset(dir).with_context(|| format!("reading dataset {}", dir.display()))
}

pub fn label_stem(scenario: usize) -> String {
    format!("scenario_{scenario:03}")
}

/// Labels read from `dir`, or extracted in memory when no directory is given.
pub fn load_labels(dir: Option<&Path>, ds: &Dataset, jobs: usize) -> Result<Vec<DecompositionLabels>> {
    match dir {
        Some(d) => (0..ds.len())
            .map(|k| read_labels(d, &label_stem(k)).with_context(|| format!("reading labels of scenario {k} from {}", d.display())))
            .collect(),
        None => par_map(ds.len(), jobs, |k| {
            extract_labels(&ds.trajectories[k]).with_context(|| format!("extracting labels of scenario {k}"))
        })
        .into_iter()
        .collect(),
    }
}

/// `f(0..n)` on up to `jobs` threads, results in index order.
pub fn par_map<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    if jobs <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(n) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let v = f(i);
                slots.lock().expect("result slots")[i] = Some(v);
            });
        }
    });
    slots.into_inner().expect("result slots").into_iter().map(|v| v.expect("every index computed")).collect()
}

pub enum TrainedModel {
    Proposed(ProposedModel),
    Unified(UnifiedModel),
    Oracle(OracleModel),
}

/// A finished `train` run: its manifest, model and the inputs it used.
pub struct TrainedRun {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub kind: ModelKind,
    pub model: TrainedModel,
}

impl TrainedRun {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = RunManifest::read(dir)?;
        if manifest.command != "train" {
            bail!("{} holds a {:?} run, expected a train run", dir.display(), manifest.command);
        }
        let kind: ModelKind = serde_json::from_value(manifest.config.get("model").cloned().unwrap_or_default())
            .with_context(|| format!("run manifest in {} has no model kind", dir.display()))?;
        let ckpt = |name: &str| dir.join(name);
        let model = match kind {
            ModelKind::Proposed => TrainedModel::Proposed(ProposedModel {
                rigid: RigidNetModel::load(&ckpt(train::RIGID_CKPT))?,
                deform: DeformationNetModel::load(&ckpt(train::DEFORM_CKPT))?,
            }),
            ModelKind::CoupledMlp | ModelKind::Deeponet => TrainedModel::Unified(UnifiedModel::load(&ckpt(train::MODEL_CKPT))?),
            ModelKind::OracleDeform => TrainedModel::Oracle(OracleModel::load(&ckpt(train::DEFORM_CKPT))?),
            ModelKind::OracleRigid => TrainedModel::Oracle(OracleModel::load(&ckpt(train::RIGID_CKPT))?),
        };
        Ok(Self { dir: dir.to_path_buf(), manifest, kind, model })
    }

    pub fn dataset_dir(&self, override_dir: Option<&Path>) -> Result<PathBuf> {
        match override_dir {
            Some(d) => Ok(d.to_path_buf()),
            None => Ok(self.manifest.input("dataset")?.to_path_buf()),
        }
    }

    pub fn labels_dir(&self) -> Option<&Path> {
        self.manifest.inputs.get("labels").map(PathBuf::as_path)
    }
}

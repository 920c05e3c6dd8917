//! Run manifests and staged output directories.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved configuration after defaults, config file and flags.
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub output: PathBuf,
    /// Files written, relative to `output`.
    pub files: Vec<PathBuf>,
    pub tool_version: String,
    pub wall_time_seconds: f64,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let p = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&p).with_context(|| format!("reading run manifest {}", p.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing run manifest {}", p.display()))
    }

    pub fn input(&self, key: &str) -> Result<&Path> {
        self.inputs.get(key).map(PathBuf::as_path).with_context(|| format!("run manifest has no {key:?} input"))
    }
}

/// Output directory written under a temporary sibling and moved into place
/// on [`Staged::commit`], so a directory either holds a complete run or the
/// previous one.
pub struct Staged {
    target: PathBuf,
    tmp: PathBuf,
    started: Instant,
}

impl Staged {
    pub fn new(target: &Path, overwrite: bool) -> Result<Self> {
        if target.exists() {
            let non_empty = fs::read_dir(target).map(|mut d| d.next().is_some()).unwrap_or(true);
            if non_empty && !overwrite {
                bail!("output directory {} already exists; pass --overwrite to replace it", target.display());
            }
        }
        let name = target.file_name().with_context(|| format!("output path {} has no final component", target.display()))?;
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        let tmp = parent.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        Ok(Self { target: target.to_path_buf(), tmp, started: Instant::now() })
    }

    /// Where files are written until the commit.
    pub fn path(&self) -> &Path {
        &self.tmp
    }

    pub fn target(&self) -> &Path {
        &self.target
    }

    pub fn commit(
        self,
        command: &str,
        config: serde_json::Value,
        seeds: BTreeMap<String, u64>,
        inputs: BTreeMap<String, PathBuf>,
    ) -> Result<RunManifest> {
        let mut files = Vec::new();
        list_files(&self.tmp, &self.tmp, &mut files)?;
        files.sort();
        let manifest = RunManifest {
            command: command.into(),
            config,
            seeds,
            inputs,
            output: self.target.clone(),
            files,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        };
        fs::write(self.tmp.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target).with_context(|| format!("removing previous {}", self.target.display()))?;
        }
        fs::rename(&self.tmp, &self.target)
            .with_context(|| format!("moving {} to {}", self.tmp.display(), self.target.display()))?;
        Ok(manifest)
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        if self.tmp.exists() {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for e in fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            list_files(root, &p, out)?;
        } else {
            out.push(p.strip_prefix(root).expect("inside root").to_path_buf());
        }
    }
    Ok(())
}

/// Recursive JSON merge: objects merge key by key, anything else replaces.
pub fn merge(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// `defaults` overlaid with `section` of the config file, if any.
pub fn resolve<T: Serialize + serde::de::DeserializeOwned>(
    defaults: &T,
    file: Option<&serde_json::Value>,
    section: &str,
) -> Result<T> {
    let mut v = serde_json::to_value(defaults)?;
    if let Some(patch) = file.and_then(|f| f.get(section)) {
        merge(&mut v, patch);
    }
    serde_json::from_value(v).with_context(|| format!("invalid [{section}] section in config file"))
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kabsch::{about_centroid, centroid, kabsch_extract};
use super::quaternion::{mat_vec, matrix_to_quat, quat_to_matrix, Quaternion};
use crate::blob;
use crate::data::Trajectory;
use crate::{Error, Mat3, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Quaternion,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform { rotation: Quaternion::IDENTITY, translation: [0.0; 3] };

    pub fn new(rotation: Quaternion, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn matrix(&self) -> Mat3 {
        quat_to_matrix(self.rotation)
    }
}

/// `R (x - c) + c + T` for a single point. All rigid maps in the crate go
/// through this function so that residuals subtract exactly.
#[inline]
pub fn rigid_point(r: &Mat3, c: Vec3, t: Vec3, x: Vec3) -> Vec3 {
    let rx = mat_vec(r, [x[0] - c[0], x[1] - c[1], x[2] - c[2]]);
    [(rx[0] + c[0]) + t[0], (rx[1] + c[1]) + t[1], (rx[2] + c[2]) + t[2]]
}

pub fn apply_rigid(x_init: &[Vec3], c: Vec3, rt: &RigidTransform) -> Vec<Vec3> {
    let r = rt.matrix();
    x_init.iter().map(|x| rigid_point(&r, c, rt.translation, *x)).collect()
}

/// Ground-truth rigid series and residual field of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionLabels {
    pub centroid: Vec3,
    pub dt: f64,
    pub n_nodes: usize,
    pub rotations: Vec<Quaternion>,
    /// Translation in the rotate-about-centroid form of [`apply_rigid`].
    pub translations: Vec<Vec3>,
    /// `n_steps * n_nodes` residual vectors, time-major.
    pub residuals: Vec<Vec3>,
}

impl DecompositionLabels {
    pub fn n_steps(&self) -> usize {
        self.rotations.len()
    }

    pub fn rigid(&self, k: usize) -> RigidTransform {
        RigidTransform::new(self.rotations[k], self.translations[k])
    }

    pub fn residual(&self, k: usize) -> &[Vec3] {
        &self.residuals[k * self.n_nodes..(k + 1) * self.n_nodes]
    }

    pub fn rigid_series(&self) -> Vec<RigidTransform> {
        (0..self.n_steps()).map(|k| self.rigid(k)).collect()
    }

    pub fn max_residual_norm(&self) -> f64 {
        self.residuals.iter().map(|d| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()).fold(0.0, f64::max)
    }
}

/// `d` with `a + d == x` in floating point, when such a value is reachable
/// from `x - a` by a few correction steps.
#[inline]
pub(crate) fn exact_residual(a: f64, x: f64) -> f64 {
    let mut d = x - a;
    for _ in 0..4 {
        let r = a + d;
        if r == x {
            break;
        }
        d += x - r;
    }
    d
}

/// Per-step Kabsch extraction with hemisphere-continuous quaternions and
/// residuals satisfying `rigid + D* == x_target` exactly.
pub fn extract_labels(traj: &Trajectory) -> Result<DecompositionLabels> {
    traj.validate()?;
    let n = traj.n_nodes();
    let c = centroid(&traj.x_init);
    let mut labels = DecompositionLabels {
        centroid: c,
        dt: traj.grid.dt,
        n_nodes: n,
        rotations: Vec::with_capacity(traj.n_steps()),
        translations: Vec::with_capacity(traj.n_steps()),
        residuals: Vec::with_capacity(traj.n_steps() * n),
    };
    let mut prev = Quaternion::IDENTITY;
    for k in 0..traj.n_steps() {
        let frame = traj.frame(k);
        let at_step = |e: Error| Error::DegenerateAtStep { time_index: k, reason: e.to_string() };
        let (r, t) = kabsch_extract(&traj.x_init, frame).map_err(at_step)?;
        let mut q = matrix_to_quat(&r).map_err(at_step)?;
        if q.dot(prev) < 0.0 {
            q = -q;
        }
        prev = q;
        let t = about_centroid(&r, t, c);
        // Residuals are taken against the quaternion's own matrix, which is
        // what every downstream reconstruction uses.
        let rq = quat_to_matrix(q);
        for (x0, x) in traj.x_init.iter().zip(frame) {
            let a = rigid_point(&rq, c, t, *x0);
            labels.residuals.push(std::array::from_fn(|j| exact_residual(a[j], x[j])));
        }
        labels.rotations.push(q);
        labels.translations.push(t);
    }
    Ok(labels)
}

pub const LABELS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LabelsManifest {
    format_version: u32,
    n_nodes: usize,
    n_steps: usize,
    dt: f64,
    centroid: Vec3,
}

/// Writes `<stem>.json` plus `<stem>_q.f64`, `<stem>_t.f64`, `<stem>_d.f64`.
pub fn write_labels(dir: &Path, stem: &str, labels: &DecompositionLabels) -> Result<()> {
    blob::create_dir(dir)?;
    let manifest = LabelsManifest {
        format_version: LABELS_FORMAT_VERSION,
        n_nodes: labels.n_nodes,
        n_steps: labels.n_steps(),
        dt: labels.dt,
        centroid: labels.centroid,
    };
    blob::write_json(&dir.join(format!("{stem}.json")), &manifest)?;
    blob::write_f64(&dir.join(format!("{stem}_q.f64")), labels.rotations.iter().flat_map(|q| q.to_array()))?;
    blob::write_f64(&dir.join(format!("{stem}_t.f64")), blob::flatten_vec3(&labels.translations))?;
    blob::write_f64(&dir.join(format!("{stem}_d.f64")), blob::flatten_vec3(&labels.residuals))
}

pub fn read_labels(dir: &Path, stem: &str) -> Result<DecompositionLabels> {
    let path = dir.join(format!("{stem}.json"));
    let m: LabelsManifest = blob::read_json(&path)?;
    if m.format_version != LABELS_FORMAT_VERSION {
        return Err(Error::format(
            &path,
            format!("labels format version {} unsupported (expected {LABELS_FORMAT_VERSION})", m.format_version),
        ));
    }
    let q = blob::read_f64(&dir.join(format!("{stem}_q.f64")), m.n_steps * 4)?;
    let t = blob::read_f64(&dir.join(format!("{stem}_t.f64")), m.n_steps * 3)?;
    let d = blob::read_f64(&dir.join(format!("{stem}_d.f64")), m.n_steps * m.n_nodes * 3)?;
    Ok(DecompositionLabels {
        centroid: m.centroid,
        dt: m.dt,
        n_nodes: m.n_nodes,
        rotations: q.chunks_exact(4).map(|c| Quaternion::new(c[0], c[1], c[2], c[3])).collect(),
        translations: blob::to_vec3(&t),
        residuals: blob::to_vec3(&d),
    })
}

//! Differentiable rigid rollout: scaled RigidNet outputs to absolute
//! `(q, T)` per step, and the reverse pass back to the outputs.

use crate::kinematics::{quat_to_matrix, Quaternion};
use crate::models::{decode_rotation, RotationMode};
use crate::{Error, Mat3, Result, Vec3};

pub(crate) struct Rollout {
    mode: RotationMode,
    /// Norms of the raw rotation channels; zero marks the identity fallback.
    u_norm: Vec<f64>,
    n: Vec<Quaternion>,
    w_norm: Vec<f64>,
    pub q: Vec<Quaternion>,
    pub t: Vec<Vec3>,
    pub r: Vec<Mat3>,
}

/// Same arithmetic as the model's own rollout, retaining intermediates.
pub(crate) fn rollout_forward(mode: RotationMode, outputs: &[f64]) -> Result<Rollout> {
    if mode == RotationMode::Euler {
        return Err(Error::Config("joint training needs a quaternion rotation mode".into()));
    }
    let steps = outputs.len() / 7;
    let mut ro = Rollout {
        mode,
        u_norm: Vec::with_capacity(steps),
        n: Vec::with_capacity(steps),
        w_norm: Vec::with_capacity(steps),
        q: Vec::with_capacity(steps),
        t: Vec::with_capacity(steps),
        r: Vec::with_capacity(steps),
    };
    let mut q = Quaternion::IDENTITY;
    let mut t = [0.0; 3];
    for k in 0..steps {
        let row = &outputs[k * 7..(k + 1) * 7];
        let (n, fallback) = decode_rotation(mode, row);
        ro.u_norm.push(if fallback { 0.0 } else { Quaternion::new(row[0], row[1], row[2], row[3]).norm() });
        ro.n.push(n);
        match mode {
            RotationMode::Incremental => {
                let w = n * q;
                let wn = w.norm();
                q = w.normalized().unwrap_or(Quaternion::IDENTITY);
                ro.w_norm.push(if wn > 0.0 { wn } else { 0.0 });
                for j in 0..3 {
                    t[j] += row[4 + j];
                }
            }
            _ => {
                q = n;
                ro.w_norm.push(1.0);
                t = [row[4], row[5], row[6]];
            }
        }
        ro.q.push(q);
        ro.t.push(t);
        ro.r.push(quat_to_matrix(q));
    }
    Ok(ro)
}

/// `dL/dq` of `R(q)` given `G = dL/dR`.
pub(crate) fn rotation_grad(q: Quaternion, g: &Mat3) -> [f64; 4] {
    let Quaternion { q0: w, q1: x, q2: y, q3: z } = q;
    let d: [Mat3; 4] = [
        [[0.0, -2.0 * z, 2.0 * y], [2.0 * z, 0.0, -2.0 * x], [-2.0 * y, 2.0 * x, 0.0]],
        [[0.0, 2.0 * y, 2.0 * z], [2.0 * y, -4.0 * x, -2.0 * w], [2.0 * z, 2.0 * w, -4.0 * x]],
        [[-4.0 * y, 2.0 * x, 2.0 * w], [2.0 * x, 0.0, 2.0 * z], [-2.0 * w, 2.0 * z, -4.0 * y]],
        [[-4.0 * z, -2.0 * w, 2.0 * x], [2.0 * w, -4.0 * z, 2.0 * y], [2.0 * x, 2.0 * y, 0.0]],
    ];
    std::array::from_fn(|c| (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| g[a][b] * d[c][a][b]).sum())
}

/// Gradient through `v / |v|` at unit `n = v / |v|`.
fn through_normalize(g: Quaternion, n: Quaternion, norm: f64) -> Quaternion {
    if norm == 0.0 {
        return Quaternion::ZERO;
    }
    g.add_scaled(n, -g.dot(n)).scale(1.0 / norm)
}

impl Quaternion {
    fn add_scaled(self, o: Quaternion, a: f64) -> Quaternion {
        Quaternion::new(self.q0 + a * o.q0, self.q1 + a * o.q1, self.q2 + a * o.q2, self.q3 + a * o.q3)
    }
}

impl Rollout {
    pub fn steps(&self) -> usize {
        self.q.len()
    }

    /// Gradients with respect to the scaled outputs (`steps x 7`), given
    /// `dL/dR_k` and `dL/dT_k` for every step.
    pub fn backward(&self, g_r: &[Mat3], g_t: &[Vec3]) -> Vec<f64> {
        let steps = self.steps();
        let mut out = vec![0.0; steps * 7];
        let mut carry_q = Quaternion::ZERO;
        let mut carry_t = [0.0; 3];
        for k in (0..steps).rev() {
            let gq = Quaternion::from_array(rotation_grad(self.q[k], &g_r[k]));
            let (gn, gt) = match self.mode {
                RotationMode::Incremental => {
                    let total = gq.add_scaled(carry_q, 1.0);
                    let gw = through_normalize(total, self.q[k], self.w_norm[k]);
                    let prev = if k == 0 { Quaternion::IDENTITY } else { self.q[k - 1] };
                    carry_q = self.n[k].conjugate() * gw;
                    for j in 0..3 {
                        carry_t[j] += g_t[k][j];
                    }
                    (gw * prev.conjugate(), carry_t)
                }
                _ => (gq, g_t[k]),
            };
            let gu = through_normalize(gn, self.n[k], self.u_norm[k]);
            out[k * 7..k * 7 + 4].copy_from_slice(&gu.to_array());
            out[k * 7 + 4..k * 7 + 7].copy_from_slice(&gt);
        }
        out
    }
}

use crate::kinematics::{rigid_point, Quaternion, RigidTransform};
use crate::{Result, Vec3};

use super::set::TrainingSet;
use crate::data::SampleIndex;

fn sq(a: &[f64], b: &[f64], sign: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - sign * y) * (x - sign * y)).sum()
}

/// `|dT_hat - dT*|^2 + min(|dq_hat - dq*|^2, |dq_hat + dq*|^2)` for one step.
pub fn rigid_loss(dq_hat: Quaternion, dt_hat: Vec3, dq_star: Quaternion, dt_star: Vec3) -> f64 {
    let a = dq_hat.to_array();
    let b = dq_star.to_array();
    sq(&dt_hat, &dt_star, 1.0) + sq(&a, &b, 1.0).min(sq(&a, &b, -1.0))
}

/// Batch mean of [`rigid_loss`].
pub fn rigid_loss_mean(pred: &[(Quaternion, Vec3)], target: &[(Quaternion, Vec3)]) -> f64 {
    assert_eq!(pred.len(), target.len(), "rigid loss over mismatched batches");
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(target).map(|(p, t)| rigid_loss(p.0, p.1, t.0, t.1)).sum::<f64>() / pred.len() as f64
}

/// Loss and gradient with respect to the unnormalized quaternion `u` and the
/// translation, for a target `q*`; the loss sees `u / |u|`.
pub(crate) fn rigid_loss_grad(u: [f64; 4], dt_hat: Vec3, q_star: [f64; 4], dt_star: Vec3) -> (f64, [f64; 4], Vec3) {
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n = u.map(|v| v / norm);
    let plus = sq(&n, &q_star, 1.0);
    let minus = sq(&n, &q_star, -1.0);
    let sign = if plus <= minus { 1.0 } else { -1.0 };
    let gn: [f64; 4] = std::array::from_fn(|i| 2.0 * (n[i] - sign * q_star[i]));
    let dot: f64 = (0..4).map(|i| gn[i] * n[i]).sum();
    let gu = std::array::from_fn(|i| (gn[i] - n[i] * dot) / norm);
    let gt = std::array::from_fn(|i| 2.0 * (dt_hat[i] - dt_star[i]));
    (sq(&dt_hat, &dt_star, 1.0) + plus.min(minus), gu, gt)
}

/// `x_target - [R(x_init - c) + c + T]` for every node and step.
pub fn deformation_target(x_init: &[Vec3], c: Vec3, rigid: &[RigidTransform], x_target: &[Vec3]) -> Vec<Vec3> {
    let n = x_init.len();
    assert_eq!(x_target.len(), rigid.len() * n, "target field does not match the rigid series");
    let mut out = Vec::with_capacity(x_target.len());
    for (k, rt) in rigid.iter().enumerate() {
        let r = rt.matrix();
        for i in 0..n {
            let a = rigid_point(&r, c, rt.translation, x_init[i]);
            let x = x_target[k * n + i];
            out.push([x[0] - a[0], x[1] - a[1], x[2] - a[2]]);
        }
    }
    out
}

/// Mean squared Euclidean error over node-time samples.
pub fn deformation_loss(d_hat: &[Vec3], d_target: &[Vec3]) -> f64 {
    assert_eq!(d_hat.len(), d_target.len(), "deformation loss over mismatched fields");
    if d_hat.is_empty() {
        return 0.0;
    }
    d_hat.iter().zip(d_target).map(|(a, b)| sq(a, b, 1.0)).sum::<f64>() / d_hat.len() as f64
}

/// [`deformation_target`] restricted to sampled triples, given each
/// scenario's rigid series (indexed by dataset scenario).
pub(crate) fn sampled_targets(set: &TrainingSet, samples: &[SampleIndex], rigid: &[Option<Vec<RigidTransform>>]) -> Result<Vec<Vec3>> {
    let x = set.x_init();
    let c = set.centroid;
    let mut mats: Vec<Option<Vec<crate::Mat3>>> = vec![None; rigid.len()];
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        let si = s.scenario as usize;
        let series = rigid[si].as_ref().ok_or_else(|| crate::Error::Missing(format!("no rigid series for scenario {si}")))?;
        let m = mats[si].get_or_insert_with(|| series.iter().map(|r| r.matrix()).collect());
        let k = s.time as usize;
        let a = rigid_point(&m[k], c, series[k].translation, x[s.node as usize]);
        let p = set.position(s);
        out.push([p[0] - a[0], p[1] - a[1], p[2] - a[2]]);
    }
    Ok(out)
}

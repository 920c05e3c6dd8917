use serde::{Deserialize, Serialize};

use super::{DecompositionLabels, Quaternion};
use crate::Vec3;

/// Per-step rigid increments. Step 0 is measured from the identity rotation
/// and zero translation, so plain accumulation recovers absolute values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSeries {
    pub translations: Vec<Vec3>,
    pub rotations: Vec<Quaternion>,
}

impl IncrementSeries {
    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }
}

/// `dT(t) = T(t) - T(t - dt)` and `dq(t) = q(t) ⊗ conj(q(t - dt))`; for unit
/// quaternions the conjugate is the inverse.
pub fn increments_from(rotations: &[Quaternion], translations: &[Vec3]) -> IncrementSeries {
    let mut out = IncrementSeries {
        translations: Vec::with_capacity(translations.len()),
        rotations: Vec::with_capacity(rotations.len()),
    };
    let mut prev_t = [0.0; 3];
    for t in translations {
        out.translations.push([t[0] - prev_t[0], t[1] - prev_t[1], t[2] - prev_t[2]]);
        prev_t = *t;
    }
    let mut prev_q = Quaternion::IDENTITY;
    for q in rotations {
        out.rotations.push(*q * prev_q.conjugate());
        prev_q = *q;
    }
    out
}

pub fn increment_targets(labels: &DecompositionLabels) -> IncrementSeries {
    increments_from(&labels.rotations, &labels.translations)
}

/// Accumulates increments into absolute `(q(t), T(t))`. Each composed
/// rotation is renormalized; a composition that collapses to zero norm
/// restarts from the identity.
pub fn compose_increments(inc: &IncrementSeries) -> (Vec<Quaternion>, Vec<Vec3>) {
    let mut rotations = Vec::with_capacity(inc.rotations.len());
    let mut q = Quaternion::IDENTITY;
    for dq in &inc.rotations {
        q = (*dq * q).normalized().unwrap_or(Quaternion::IDENTITY);
        rotations.push(q);
    }
    let mut translations = Vec::with_capacity(inc.translations.len());
    let mut t = [0.0; 3];
    for dt in &inc.translations {
        for k in 0..3 {
            t[k] += dt[k];
        }
        translations.push(t);
    }
    (rotations, translations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_identity_increments() {
        let q = Quaternion::from_yaw(0.3);
        let inc = increments_from(&[q; 5], &[[1.0, 2.0, 3.0]; 5]);
        assert_eq!(inc.translations[0], [1.0, 2.0, 3.0]);
        assert!(inc.translations[1..].iter().all(|t| *t == [0.0; 3]));
        for dq in &inc.rotations[1..] {
            assert!((dq.q0 - 1.0).abs() < 1e-15 && dq.q3.abs() < 1e-15);
        }
    }

    #[test]
    fn constant_rate_rotation() {
        let step = 1f64.to_radians();
        let qs: Vec<_> = (1..=50).map(|k| Quaternion::from_yaw(step * k as f64)).collect();
        let inc = increments_from(&qs, &vec![[0.0; 3]; 50]);
        let expected = Quaternion::from_yaw(step);
        for dq in &inc.rotations {
            assert!(super::super::quat_double_cover_distance(*dq, expected) < 1e-24);
        }
    }

    #[test]
    fn ninety_single_degree_steps() {
        let inc = IncrementSeries {
            translations: vec![[0.0; 3]; 90],
            rotations: vec![Quaternion::from_yaw(1f64.to_radians()); 90],
        };
        let (qs, _) = compose_increments(&inc);
        let yaw = qs[89].to_euler_zyx()[0].to_degrees();
        assert!((yaw - 90.0).abs() < 1e-6, "{yaw}");
        assert!(qs.iter().all(|q| (q.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn identity_increments_and_ramp() {
        let inc = IncrementSeries {
            translations: vec![[0.1, 0.0, 0.0]; 10],
            rotations: vec![Quaternion::IDENTITY; 10],
        };
        let (qs, ts) = compose_increments(&inc);
        assert!(qs.iter().all(|q| *q == Quaternion::IDENTITY));
        for (k, t) in ts.iter().enumerate() {
            assert!((t[0] - 0.1 * (k + 1) as f64).abs() < 1e-12);
        }
    }
}

use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};

use crate::{Error, Mat3, Result, Vec3};

/// Quaternion `(q0, q1, q2, q3)` with the scalar part first,
/// Hamilton product, right-handed frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { q0: 1.0, q1: 0.0, q2: 0.0, q3: 0.0 };
    pub const ZERO: Quaternion = Quaternion { q0: 0.0, q1: 0.0, q2: 0.0, q3: 0.0 };

    pub const fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Self { q0, q1, q2, q3 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q0, self.q1, self.q2, self.q3]
    }

    /// Rotation of `angle` radians about a (not necessarily unit) axis.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n)
    }

    /// Rotation about the vertical `z` axis.
    pub fn from_yaw(angle: f64) -> Self {
        Self::from_axis_angle([0.0, 0.0, 1.0], angle)
    }

    /// Intrinsic z-y-x Euler angles `[yaw, pitch, roll]`.
    pub fn from_euler_zyx(angles: Vec3) -> Self {
        let qz = Self::from_axis_angle([0.0, 0.0, 1.0], angles[0]);
        let qy = Self::from_axis_angle([0.0, 1.0, 0.0], angles[1]);
        let qx = Self::from_axis_angle([1.0, 0.0, 0.0], angles[2]);
        qz * qy * qx
    }

    /// Inverse of [`Quaternion::from_euler_zyx`] for unit quaternions. Pitch
    /// is clamped to `[-pi/2, pi/2]`; at the gimbal-lock singularity the split
    /// between yaw and roll is arbitrary.
    pub fn to_euler_zyx(self) -> Vec3 {
        let r = quat_to_matrix(self);
        let pitch = (-r[2][0]).clamp(-1.0, 1.0).asin();
        let yaw = r[1][0].atan2(r[0][0]);
        let roll = r[2][1].atan2(r[2][2]);
        [yaw, pitch, roll]
    }

    pub fn norm_squared(self) -> f64 {
        self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn dot(self, o: Quaternion) -> f64 {
        self.q0 * o.q0 + self.q1 * o.q1 + self.q2 * o.q2 + self.q3 * o.q3
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.q0, -self.q1, -self.q2, -self.q3)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.q0 * s, self.q1 * s, self.q2 * s, self.q3 * s)
    }

    pub fn normalized(self) -> Result<Self> {
        quat_normalize(self)
    }

    /// Rotation angle in `[0, pi]` between two unit quaternions, invariant to
    /// the sign of either.
    pub fn angle_to(self, other: Quaternion) -> f64 {
        // atan2 form stays accurate for nearly identical rotations.
        let rel = other * self.conjugate();
        let v = (rel.q1 * rel.q1 + rel.q2 * rel.q2 + rel.q3 * rel.q3).sqrt();
        2.0 * v.atan2(rel.q0.abs())
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        mat_vec(&quat_to_matrix(self), v)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, b: Quaternion) -> Quaternion {
        quat_multiply(self, b)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion::new(-self.q0, -self.q1, -self.q2, -self.q3)
    }
}

/// Unit quaternion with the same direction; the zero quaternion has none.
pub fn quat_normalize(q: Quaternion) -> Result<Quaternion> {
    let n = q.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Degenerate(format!("cannot normalize quaternion with norm {n}")));
    }
    Ok(q.scale(1.0 / n))
}

/// Hamilton product `a ⊗ b`.
pub fn quat_multiply(a: Quaternion, b: Quaternion) -> Quaternion {
    Quaternion::new(
        a.q0 * b.q0 - a.q1 * b.q1 - a.q2 * b.q2 - a.q3 * b.q3,
        a.q0 * b.q1 + a.q1 * b.q0 + a.q2 * b.q3 - a.q3 * b.q2,
        a.q0 * b.q2 - a.q1 * b.q3 + a.q2 * b.q0 + a.q3 * b.q1,
        a.q0 * b.q3 + a.q1 * b.q2 - a.q2 * b.q1 + a.q3 * b.q0,
    )
}

/// Rotation matrix of a unit quaternion.
pub fn quat_to_matrix(q: Quaternion) -> Mat3 {
    let Quaternion { q0: w, q1: x, q2: y, q3: z } = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

const ROTATION_TOLERANCE: f64 = 1e-8;

/// Unit quaternion of a proper rotation matrix, with `q0 >= 0`.
///
/// Uses `q0 = sqrt(1 + tr R) / 2` and the off-diagonal differences; when
/// `1 + tr R <= 1e-8` (rotations near 180 degrees) the largest diagonal
/// element selects the pivot component instead.
pub fn matrix_to_quat(r: &Mat3) -> Result<Quaternion> {
    check_rotation(r)?;
    let trace = r[0][0] + r[1][1] + r[2][2];
    let q = if 1.0 + trace > ROTATION_TOLERANCE {
        let w = 0.5 * (1.0 + trace).sqrt();
        let f = 0.25 / w;
        Quaternion::new(w, (r[2][1] - r[1][2]) * f, (r[0][2] - r[2][0]) * f, (r[1][0] - r[0][1]) * f)
    } else if r[0][0] >= r[1][1] && r[0][0] >= r[2][2] {
        let x = 0.5 * (1.0 + r[0][0] - r[1][1] - r[2][2]).max(0.0).sqrt();
        let f = 0.25 / x;
        Quaternion::new((r[2][1] - r[1][2]) * f, x, (r[0][1] + r[1][0]) * f, (r[0][2] + r[2][0]) * f)
    } else if r[1][1] >= r[2][2] {
        let y = 0.5 * (1.0 - r[0][0] + r[1][1] - r[2][2]).max(0.0).sqrt();
        let f = 0.25 / y;
        Quaternion::new((r[0][2] - r[2][0]) * f, (r[0][1] + r[1][0]) * f, y, (r[1][2] + r[2][1]) * f)
    } else {
        let z = 0.5 * (1.0 - r[0][0] - r[1][1] + r[2][2]).max(0.0).sqrt();
        let f = 0.25 / z;
        Quaternion::new((r[1][0] - r[0][1]) * f, (r[0][2] + r[2][0]) * f, (r[1][2] + r[2][1]) * f, z)
    };
    let q = quat_normalize(q)?;
    Ok(if q.q0 < 0.0 { -q } else { q })
}

fn check_rotation(r: &Mat3) -> Result<()> {
    let mut dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let rtr: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((rtr - target).abs());
        }
    }
    if !(dev <= ROTATION_TOLERANCE) {
        return Err(Error::InvalidRotation(format!("not orthonormal (max |RtR - I| = {dev:e})")));
    }
    let det = det3(r);
    if !(det > 0.0) {
        return Err(Error::InvalidRotation(format!("determinant {det} is not +1")));
    }
    Ok(())
}

/// `min(|a - b|^2, |a + b|^2)`: squared distance modulo the double cover.
pub fn quat_double_cover_distance(a: Quaternion, b: Quaternion) -> f64 {
    let minus = (a.q0 - b.q0).powi(2) + (a.q1 - b.q1).powi(2) + (a.q2 - b.q2).powi(2) + (a.q3 - b.q3).powi(2);
    let plus = (a.q0 + b.q0).powi(2) + (a.q1 + b.q1).powi(2) + (a.q2 + b.q2).powi(2) + (a.q3 + b.q3).powi(2);
    minus.min(plus)
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[inline]
pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// Angle of the relative rotation `a^T b`.
pub fn rotation_angle_between(a: &Mat3, b: &Mat3) -> f64 {
    let rel = mat_mul(&transpose(a), b);
    let c = 0.5 * (rel[0][0] + rel[1][1] + rel[2][2] - 1.0);
    let s = 0.5
        * ((rel[2][1] - rel[1][2]).powi(2) + (rel[0][2] - rel[2][0]).powi(2) + (rel[1][0] - rel[0][1]).powi(2))
            .sqrt();
    s.atan2(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_unit(rng: &mut impl Rng) -> Quaternion {
        loop {
            let q = Quaternion::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = q.norm();
            if n > 0.1 && n <= 1.0 {
                return q.scale(1.0 / n);
            }
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(quat_normalize(Quaternion::new(2.0, 0.0, 0.0, 0.0)).unwrap(), Quaternion::IDENTITY);
        assert_eq!(
            quat_normalize(Quaternion::new(1.0, 1.0, 1.0, 1.0)).unwrap(),
            Quaternion::new(0.5, 0.5, 0.5, 0.5)
        );
        assert!(matches!(quat_normalize(Quaternion::ZERO), Err(Error::Degenerate(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let q = Quaternion::new(rng.random(), rng.random(), -rng.random::<f64>(), rng.random());
            assert!((quat_normalize(q).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn multiply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_unit(&mut rng);
        assert_eq!(Quaternion::IDENTITY * q, q);
        let i = Quaternion::new(0.0, 1.0, 0.0, 0.0);
        assert_eq!(i * i, Quaternion::new(-1.0, 0.0, 0.0, 0.0));
        for _ in 0..100 {
            let a = random_unit(&mut rng).scale(rng.random_range(0.1..3.0));
            let b = random_unit(&mut rng).scale(rng.random_range(0.1..3.0));
            assert!(((a * b).norm() - a.norm() * b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_turn_about_z() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = quat_to_matrix(Quaternion::new(h, 0.0, 0.0, h));
        let expected = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
        assert_eq!(quat_to_matrix(Quaternion::IDENTITY), [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn matrix_round_trip_returns_positive_scalar_representative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let q = random_unit(&mut rng);
            let back = matrix_to_quat(&quat_to_matrix(q)).unwrap();
            assert!(back.q0 >= 0.0);
            worst = worst.max(quat_double_cover_distance(q, back).sqrt());
        }
        assert!(worst < 1e-10, "worst {worst:e}");
    }

    #[test]
    fn near_half_turn_uses_diagonal_branch() {
        for axis in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 2.0, -0.5]] {
            let q = Quaternion::from_axis_angle(axis, std::f64::consts::PI);
            let back = matrix_to_quat(&quat_to_matrix(q)).unwrap();
            assert!(quat_double_cover_distance(q, back) < 1e-20);
        }
    }

    #[test]
    fn rejects_reflections_and_non_orthonormal() {
        let refl = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(matches!(matrix_to_quat(&refl), Err(Error::InvalidRotation(_))));
        let skew = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(matrix_to_quat(&skew), Err(Error::InvalidRotation(_))));
    }

    #[test]
    fn double_cover_distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = random_unit(&mut rng);
        assert_eq!(quat_double_cover_distance(q, q), 0.0);
        assert_eq!(quat_double_cover_distance(q, -q), 0.0);
        let d = quat_double_cover_distance(Quaternion::IDENTITY, Quaternion::new(0.0, 1.0, 0.0, 0.0));
        assert!((d - 2.0).abs() < 1e-15);
    }

    #[test]
    fn euler_round_trip_away_from_gimbal_lock() {
        let angles = [0.7, -0.4, 1.2];
        let back = Quaternion::from_euler_zyx(angles).to_euler_zyx();
        for k in 0..3 {
            assert!((angles[k] - back[k]).abs() < 1e-12);
        }
    }
}

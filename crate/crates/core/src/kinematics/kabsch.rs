use crate::kinematics::quaternion::{det3, mat_vec};
use crate::kinematics::svd::svd3;
use crate::{Error, Mat3, Result, Vec3};

/// Relative singular-value threshold below which `H` counts as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

pub fn centroid(points: &[Vec3]) -> Vec3 {
    let mut c = [0.0; 3];
    for p in points {
        for k in 0..3 {
            c[k] += p[k];
        }
    }
    let n = points.len().max(1) as f64;
    c.map(|v| v / n)
}

/// Least-squares rigid alignment of `x_init` onto `x_target`.
///
/// Returns `(R, T)` with `x -> R x + T` the RMSD-optimal rigid map and
/// `T = mean(x_target) - R c`, `c` the centroid of `x_init`. `R` is always a
/// proper rotation. For the rotation-about-centroid form used by
/// [`apply_rigid`](super::apply_rigid) see [`about_centroid`].
pub fn kabsch_extract(x_init: &[Vec3], x_target: &[Vec3]) -> Result<(Mat3, Vec3)> {
    if x_init.len() != x_target.len() {
        return Err(Error::Shape(format!(
            "x_init has {} nodes but x_target has {}",
            x_init.len(),
            x_target.len()
        )));
    }
    if x_init.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 nodes, got {}", x_init.len())));
    }
    let c = centroid(x_init);
    let ct = centroid(x_target);
    let mut h = [[0.0; 3]; 3];
    for (a, b) in x_init.iter().zip(x_target) {
        let pa = [a[0] - c[0], a[1] - c[1], a[2] - c[2]];
        let pb = [b[0] - ct[0], b[1] - ct[1], b[2] - ct[2]];
        for i in 0..3 {
            for j in 0..3 {
                h[i][j] += pa[i] * pb[j];
            }
        }
    }
    let mut s = svd3(&h);
    if !s.sigma[0].is_finite() {
        return Err(Error::Degenerate("non-finite cross-covariance".into()));
    }
    if s.sigma[0] == 0.0 || s.sigma[1] <= RANK_TOLERANCE * s.sigma[0] {
        return Err(Error::Degenerate(format!(
            "cross-covariance rank <= 1 (singular values {:e}, {:e}, {:e}); points coincide or are collinear",
            s.sigma[0], s.sigma[1], s.sigma[2]
        )));
    }
    if s.sigma[2] <= RANK_TOLERANCE * s.sigma[0] {
        // Planar clouds: the third left vector is fixed up to sign by the first two.
        let (u0, u1) = ([s.u[0][0], s.u[1][0], s.u[2][0]], [s.u[0][1], s.u[1][1], s.u[2][1]]);
        let u2 = cross(u0, u1);
        for i in 0..3 {
            s.u[i][2] = u2[i];
        }
    }
    let mut r = v_ut(&s.v, &s.u);
    if det3(&r) < 0.0 {
        for row in s.v.iter_mut() {
            row[2] = -row[2];
        }
        r = v_ut(&s.v, &s.u);
    }
    let rc = mat_vec(&r, c);
    Ok((r, [ct[0] - rc[0], ct[1] - rc[1], ct[2] - rc[2]]))
}

fn v_ut(v: &Mat3, u: &Mat3) -> Mat3 {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = (0..3).map(|k| v[i][k] * u[j][k]).sum();
        }
    }
    r
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Translation of the same rigid map written as `R (x - c) + c + T'`.
pub fn about_centroid(r: &Mat3, t: Vec3, c: Vec3) -> Vec3 {
    let rc = mat_vec(r, c);
    [t[0] + rc[0] - c[0], t[1] + rc[1] - c[1], t[2] + rc[2] - c[2]]
}

/// Root mean squared deviation of `x -> R x + T` applied to `a` against `b`.
pub fn rigid_rmsd(r: &Mat3, t: Vec3, a: &[Vec3], b: &[Vec3]) -> f64 {
    let mut s = 0.0;
    for (p, q) in a.iter().zip(b) {
        let y = mat_vec(r, *p);
        s += (0..3).map(|k| (y[k] + t[k] - q[k]).powi(2)).sum::<f64>();
    }
    (s / a.len().max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::quaternion::{quat_to_matrix, rotation_angle_between, Quaternion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut impl Rng) -> Mat3 {
        loop {
            let q = Quaternion::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = q.norm();
            if n > 0.1 && n <= 1.0 {
                return quat_to_matrix(q.scale(1.0 / n));
            }
        }
    }

    fn cloud(rng: &mut impl Rng, n: usize) -> Vec<Vec3> {
        (0..n).map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0))).collect()
    }

    #[test]
    fn identity_when_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = cloud(&mut rng, 40);
        let (r, t) = kabsch_extract(&x, &x).unwrap();
        assert!(rotation_angle_between(&r, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) < 1e-12);
        assert!(t.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn recovers_constructed_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let x = cloud(&mut rng, 30);
            let r0 = random_rotation(&mut rng);
            let t0: Vec3 = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
            let y: Vec<Vec3> = x
                .iter()
                .map(|p| {
                    let q = mat_vec(&r0, *p);
                    [q[0] + t0[0], q[1] + t0[1], q[2] + t0[2]]
                })
                .collect();
            let (r, t) = kabsch_extract(&x, &y).unwrap();
            assert!(rotation_angle_between(&r, &r0) < 1e-9);
            for k in 0..3 {
                assert!((t[k] - t0[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn planar_cloud_is_supported() {
        let x: Vec<Vec3> = (0..5).flat_map(|i| (0..5).map(move |j| [i as f64, j as f64, 0.0])).collect();
        let r0 = quat_to_matrix(Quaternion::from_axis_angle([1.0, 1.0, 0.0], 0.8));
        let y: Vec<Vec3> = x.iter().map(|p| mat_vec(&r0, *p)).collect();
        let (r, _) = kabsch_extract(&x, &y).unwrap();
        assert!(rotation_angle_between(&r, &r0) < 1e-9);
    }

    #[test]
    fn reflected_target_still_yields_proper_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = cloud(&mut rng, 25);
        let y: Vec<Vec3> = x.iter().map(|p| [p[0], p[1], -p[2]]).collect();
        let (r, _) = kabsch_extract(&x, &y).unwrap();
        assert!((det3(&r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let two = vec![[0.0; 3], [1.0, 0.0, 0.0]];
        assert!(matches!(kabsch_extract(&two, &two), Err(Error::Degenerate(_))));
        let line: Vec<Vec3> = (0..10).map(|i| [i as f64, 2.0 * i as f64, 0.5]).collect();
        assert!(matches!(kabsch_extract(&line, &line), Err(Error::Degenerate(_))));
        let same = vec![[1.0, 1.0, 1.0]; 6];
        assert!(matches!(kabsch_extract(&same, &same), Err(Error::Degenerate(_))));
        assert!(matches!(kabsch_extract(&line, &line[..4]), Err(Error::Shape(_))));
    }

    #[test]
    fn beats_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let x = cloud(&mut rng, 20);
            let r0 = random_rotation(&mut rng);
            let y: Vec<Vec3> = x
                .iter()
                .map(|p| {
                    let q = mat_vec(&r0, *p);
                    std::array::from_fn(|k| q[k] + rng.random_range(-0.3..0.3))
                })
                .collect();
            let (r, t) = kabsch_extract(&x, &y).unwrap();
            let best = rigid_rmsd(&r, t, &x, &y);
            let c = centroid(&x);
            let ct = centroid(&y);
            for _ in 0..500 {
                let rr = random_rotation(&mut rng);
                let rc = mat_vec(&rr, c);
                let tt = [ct[0] - rc[0], ct[1] - rc[1], ct[2] - rc[2]];
                assert!(best <= rigid_rmsd(&rr, tt, &x, &y) + 1e-12);
            }
        }
    }
}

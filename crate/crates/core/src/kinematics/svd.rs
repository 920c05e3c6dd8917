//! One-sided Jacobi SVD for 3x3 matrices.

use crate::Mat3;

/// `a = u * diag(sigma) * v^T`, singular values sorted descending.
///
/// Columns of `u` belonging to zero singular values are left as zero; the
/// caller decides how to complete the basis.
#[derive(Debug, Clone, Copy)]
pub struct Svd3 {
    pub u: Mat3,
    pub sigma: [f64; 3],
    pub v: Mat3,
}

const MAX_SWEEPS: usize = 60;

pub fn svd3(a: &Mat3) -> Svd3 {
    // Work on columns: w = a * v is orthogonalized in place.
    let mut w = *a;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let mut alpha = 0.0;
            let mut beta = 0.0;
            let mut gamma = 0.0;
            for row in &w {
                alpha += row[p] * row[p];
                beta += row[q] * row[q];
                gamma += row[p] * row[q];
            }
            if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            for m in [&mut w, &mut v] {
                for row in m.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = c * xp - s * xq;
                    row[q] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: [f64; 3] = std::array::from_fn(|j| (0..3).map(|i| w[i][j] * w[i][j]).sum::<f64>().sqrt());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut out = Svd3 { u: [[0.0; 3]; 3], sigma: [0.0; 3], v: [[0.0; 3]; 3] };
    for (k, &j) in order.iter().enumerate() {
        out.sigma[k] = norms[j];
        for i in 0..3 {
            out.v[i][k] = v[i][j];
            if norms[j] > 0.0 {
                out.u[i][k] = w[i][j] / norms[j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::quaternion::{mat_mul, transpose};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reconstruct(s: &Svd3) -> Mat3 {
        let mut us = s.u;
        for row in us.iter_mut() {
            for k in 0..3 {
                row[k] *= s.sigma[k];
            }
        }
        mat_mul(&us, &transpose(&s.v))
    }

    #[test]
    fn random_matrices_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let a: Mat3 = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-5.0..5.0)));
            let s = svd3(&a);
            assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= s.sigma[2] && s.sigma[2] >= 0.0);
            let r = reconstruct(&s);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((r[i][j] - a[i][j]).abs() < 1e-11);
                }
            }
            let vtv = mat_mul(&transpose(&s.v), &s.v);
            let utu = mat_mul(&transpose(&s.u), &s.u);
            for i in 0..3 {
                for j in 0..3 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((vtv[i][j] - e).abs() < 1e-12);
                    assert!((utu[i][j] - e).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rank_one_has_two_zero_values() {
        let a = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [-1.0, -2.0, -3.0]];
        let s = svd3(&a);
        assert!(s.sigma[1] < 1e-12 * s.sigma[0]);
        assert!(s.sigma[2] < 1e-12 * s.sigma[0]);
    }
}

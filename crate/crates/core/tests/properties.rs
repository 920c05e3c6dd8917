use proptest::prelude::*;

use crashdecomp::data::{lhs_sample, subsample, ParamRanges};
use crashdecomp::evaluation::{deformation_iou, directional_consistency, top_set};
use crashdecomp::kinematics::{
    centroid, compose_increments, det3, increments_from, kabsch_extract, mat_mul, mat_vec, matrix_to_quat, quat_double_cover_distance,
    quat_multiply, quat_to_matrix, rigid_rmsd, rotation_angle_between, transpose, Quaternion, RigidTransform,
};
use crashdecomp::models::{reconstruct_total, rigid_positions, OutputScaling};
use crashdecomp::training::rigid_loss;
use crashdecomp::Vec3;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    [-r..r, -r..r, -r..r]
}

fn unit_quat() -> impl Strategy<Value = Quaternion> {
    [-1.0..1.0f64, -1.0..1.0, -1.0..1.0, -1.0..1.0]
        .prop_filter("near-zero quaternion", |a| a.iter().map(|v| v * v).sum::<f64>() > 1e-3)
        .prop_map(|a| Quaternion::from_array(a).normalized().unwrap())
}

fn cloud(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(vec3(3.0), n)
}

fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
    (0..3).all(|j| (a[j] - b[j]).abs() <= tol)
}

proptest! {
    #[test]
    fn rotation_matrices_are_orthonormal(q in unit_quat()) {
        let r = quat_to_matrix(q);
        let i = mat_mul(&transpose(&r), &r);
        for a in 0..3 {
            for b in 0..3 {
                prop_assert!((i[a][b] - f64::from(u8::from(a == b))).abs() < 1e-12);
            }
        }
        prop_assert!((det3(&r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_round_trip_up_to_sign(q in unit_quat()) {
        let back = matrix_to_quat(&quat_to_matrix(q)).unwrap();
        prop_assert!(quat_double_cover_distance(q, back) < 1e-9);
    }

    #[test]
    fn hamilton_product_composes_rotations(a in unit_quat(), b in unit_quat(), v in vec3(5.0)) {
        let lhs = quat_to_matrix(quat_multiply(a, b));
        let rhs = mat_mul(&quat_to_matrix(a), &quat_to_matrix(b));
        prop_assert!(rotation_angle_between(&lhs, &rhs) < 1e-7);
        prop_assert!(close(quat_multiply(a, b).rotate(v), a.rotate(b.rotate(v)), 1e-12));
    }

    #[test]
    fn kabsch_recovers_rigid_motion(x in cloud(4..40), q in unit_quat(), t in vec3(10.0)) {
        let r = quat_to_matrix(q);
        let y: Vec<Vec3> = x.iter().map(|p| { let m = mat_vec(&r, *p); [m[0] + t[0], m[1] + t[1], m[2] + t[2]] }).collect();
        prop_assume!(kabsch_extract(&x, &y).is_ok());
        let (r_hat, t_hat) = kabsch_extract(&x, &y).unwrap();
        prop_assert!(rigid_rmsd(&r_hat, t_hat, &x, &y) < 1e-9);
        prop_assert!((det3(&r_hat) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kabsch_beats_perturbed_rotations(x in cloud(5..30), y in cloud(5..30), axis in vec3(1.0), angle in 1e-3..0.5f64) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        prop_assume!(kabsch_extract(x, y).is_ok());
        let (r, t) = kabsch_extract(x, y).unwrap();
        prop_assume!(axis.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let p = mat_mul(&quat_to_matrix(Quaternion::from_axis_angle(axis, angle)), &r);
        let (cx, cy) = (centroid(x), centroid(y));
        let px = mat_vec(&p, cx);
        let tp = [cy[0] - px[0], cy[1] - px[1], cy[2] - px[2]];
        prop_assert!(rigid_rmsd(&r, t, x, y) <= rigid_rmsd(&p, tp, x, y) + 1e-12);
    }

    #[test]
    fn increments_round_trip(qs in prop::collection::vec(unit_quat(), 1..30), ts in prop::collection::vec(vec3(20.0), 30)) {
        let ts = &ts[..qs.len()];
        let (q, t) = compose_increments(&increments_from(&qs, ts));
        for k in 0..qs.len() {
            prop_assert!(quat_double_cover_distance(q[k], qs[k]) < 1e-9);
            prop_assert!(close(t[k], ts[k], 1e-9));
        }
    }

    #[test]
    fn rigid_loss_is_sign_invariant(a in unit_quat(), b in unit_quat(), ta in vec3(1.0), tb in vec3(1.0)) {
        let l = rigid_loss(a, ta, b, tb);
        prop_assert!(l >= 0.0);
        prop_assert_eq!(l, rigid_loss(a, ta, b.scale(-1.0), tb));
        prop_assert_eq!(rigid_loss(a, ta, a.scale(-1.0), ta), 0.0);
    }

    #[test]
    fn zero_deformation_reconstructs_rigid_positions(x in cloud(1..20), q in unit_quat(), t in vec3(5.0)) {
        let c = centroid(&x);
        let rigid = [RigidTransform::new(q, t)];
        let zeros = vec![[0.0; 3]; x.len()];
        prop_assert_eq!(reconstruct_total(&x, c, &rigid, &zeros).unwrap(), rigid_positions(&x, c, &rigid));
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in cloud(1..60), b in cloud(1..60), frac in 0.01..1.0f64) {
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        let ab = deformation_iou(a, b, frac).unwrap();
        prop_assert_eq!(ab, deformation_iou(b, a, frac).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(deformation_iou(a, a, frac).unwrap(), 1.0);
        prop_assert_eq!(top_set(a, frac).len(), ((frac * n as f64).ceil() as usize).min(n));
    }

    #[test]
    fn directional_consistency_is_a_mean_cosine(x in cloud(1..30), r in cloud(30..31), d in cloud(30..31), s in 0.1..10.0f64) {
        let n = x.len();
        let (r, d) = (&r[..n], &d[..n]);
        if let Some(c) = directional_consistency(&x, r, d).unwrap() {
            prop_assert!((-1.0..=1.0).contains(&c));
            let scaled: Vec<Vec3> = d.iter().map(|v| v.map(|e| e * s)).collect();
            let flipped: Vec<Vec3> = d.iter().map(|v| v.map(|e| -e)).collect();
            prop_assert!((directional_consistency(&x, r, &scaled).unwrap().unwrap() - c).abs() < 1e-12);
            prop_assert!((directional_consistency(&x, r, &flipped).unwrap().unwrap() + c).abs() < 1e-12);
        }
    }

    #[test]
    fn subsample_draws_distinct_in_range_triples(s in 1usize..6, t in 1usize..20, n in 1usize..30, ratio in 0.001..1.0f64, seed: u64) {
        let set = subsample(s, t, n, ratio, seed).unwrap();
        let total = s * t * n;
        prop_assert_eq!(set.len(), ((ratio * total as f64).round() as usize).min(total));
        let mut flat: Vec<usize> = set.indices.iter().map(|i| {
            assert!((i.scenario as usize) < s && (i.time as usize) < t && (i.node as usize) < n);
            (i.scenario as usize * t + i.time as usize) * n + i.node as usize
        }).collect();
        let len = flat.len();
        flat.dedup();
        prop_assert_eq!(flat.len(), len);
    }

    #[test]
    fn lhs_fills_every_stratum_once(n in 1usize..60, seed: u64) {
        let ranges = ParamRanges::default();
        let sample = lhs_sample(n, &ranges, seed).unwrap();
        for (j, (lo, hi)) in ranges.as_array().iter().enumerate() {
            let mut strata: Vec<usize> = sample.iter().map(|s| (((s.eta()[j] - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)).collect();
            strata.sort_unstable();
            prop_assert_eq!(strata, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn output_scaling_standardizes_columns(rows in prop::collection::vec([-50.0..50.0f64, -1.0..1.0, 3.0..3.0001], 2..40)) {
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let s = OutputScaling::fit(&flat, 3).unwrap();
        let mut out = [0.0; 3];
        s.apply(&[0.0; 3], &mut out);
        for j in 0..3 {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
            prop_assert!((out[j] - mean).abs() < 1e-9);
        }
    }
}

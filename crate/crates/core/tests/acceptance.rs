//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Pass criterion numbers as arguments to run a subset,
//! e.g. `cargo test --test acceptance -- 1 4 10`.

use std::cell::OnceCell;
use std::io::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crashdecomp::data::{default_splits, generate_dataset, lhs_sample, subsample, Dataset, GeneratorConfig, ParamRanges, Split, TimeGrid};
use crashdecomp::evaluation::{
    analytic_phase_pulse, deformation_iou_curve, detect_phases, directional_consistency_curve, PHASE_DWELL, PHASE_EPS, TOP_FRACTION,
};
use crashdecomp::kinematics::{
    centroid, compose_increments, increments_from, kabsch_extract, mat_vec, quat_to_matrix, rigid_rmsd, rotation_angle_between, Quaternion,
};
use crashdecomp::landscape::{interpolate_1d, landscape_2d, pairwise_connectivity, random_plane_directions, LossProbe, PlaneConfig};
use crashdecomp::models::{reconstruct_total, rigid_positions, ProposedModel, RotationMode, UnifiedModel};
use crashdecomp::tensor_nn::{mlp_init, Activation, Matrix, NetworkConfig};
use crashdecomp::training::{
    rigid_loss, train_stage1, LrSchedule, train_stage2, train_strategy, train_unified, Strategy, StrategyOutcome, TrainConfig, TrainReport, TrainingSet,
};
use crashdecomp::Vec3;

/// Epochs of every network-level run. Stage 1 keeps its full default.
const EPOCHS: usize = 10;
const VAL_RATIO: f64 = 0.05;
const SEEDS: [u64; 3] = [0, 1, 2];
/// Stage-2 seeds for the pairwise interpolation run.
const STAGE2_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
/// Stage-2 epochs of the model scored against ground-truth crush regions.
const ANCHORED_EPOCHS: usize = 100;

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

struct Outcome {
    failed: Vec<usize>,
}

impl Outcome {
    fn record(&mut self, id: usize, name: &str, ok: bool, detail: String, secs: f64) {
        say(&format!("{} [{id:>2}] {name}: {detail} ({secs:.1} s)", if ok { "PASS" } else { "FAIL" }));
        if !ok {
            self.failed.push(id);
        }
    }
}

fn cfg(seed: u64) -> TrainConfig {
    TrainConfig { epochs: EPOCHS, seed, val_ratio: VAL_RATIO, ..TrainConfig::default() }
}

/// Lazily trained models shared between criteria.
struct Fixtures {
    dataset: Dataset,
    set: OnceCell<TrainingSet<'static>>,
    frozen: [OnceCell<StrategyOutcome>; 3],
    joint: [OnceCell<TrainReport>; 3],
    coupled: [OnceCell<(UnifiedModel, TrainReport)>; 3],
    /// DeformationNets trained on the seed-0 RigidNet, by stage-2 seed.
    stage2: [OnceCell<ProposedModel>; 5],
    anchored: OnceCell<ProposedModel>,
    training_seconds: std::cell::Cell<f64>,
}

impl Fixtures {
    fn new() -> &'static Self {
        let dataset = generate_dataset(500, 0, TimeGrid::default(), GeneratorConfig::default()).expect("default dataset");
        Box::leak(Box::new(Self {
            dataset,
            set: OnceCell::new(),
            frozen: Default::default(),
            joint: Default::default(),
            coupled: Default::default(),
            stage2: Default::default(),
            anchored: OnceCell::new(),
            training_seconds: 0.0.into(),
        }))
    }

    fn timed<T>(&self, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let v = f();
        self.training_seconds.set(self.training_seconds.get() + t.elapsed().as_secs_f64());
        v
    }

    fn set(&'static self) -> &'static TrainingSet<'static> {
        self.set.get_or_init(|| TrainingSet::new(&self.dataset).expect("labels"))
    }

    fn frozen(&'static self, i: usize) -> &'static StrategyOutcome {
        self.frozen[i].get_or_init(|| {
            let c = TrainConfig { strategy: Strategy::F, ..cfg(SEEDS[i]) };
            self.timed(|| train_strategy(&c, self.set()).expect("strategy F"))
        })
    }

    fn joint(&'static self, i: usize) -> &'static TrainReport {
        self.joint[i].get_or_init(|| {
            let c = TrainConfig { strategy: Strategy::D, ..cfg(SEEDS[i]) };
            self.timed(|| train_strategy(&c, self.set()).expect("strategy D").report)
        })
    }

    fn coupled(&'static self, i: usize) -> &'static (UnifiedModel, TrainReport) {
        self.coupled[i].get_or_init(|| self.timed(|| train_unified(&cfg(SEEDS[i]), self.set()).expect("coupled MLP")))
    }

    /// Strategy F with cosine-decayed learning rate, trained to convergence.
    fn anchored(&'static self) -> &'static ProposedModel {
        self.anchored.get_or_init(|| {
            let c = TrainConfig {
                epochs: ANCHORED_EPOCHS,
                strategy: Strategy::F,
                lr_schedule: LrSchedule::Cosine { final_fraction: 0.01 },
                ..cfg(0)
            };
            train_strategy(&c, self.set()).expect("strategy F").model
        })
    }

    fn stage2(&'static self, i: usize) -> &'static ProposedModel {
        self.stage2[i].get_or_init(|| {
            let base = &self.frozen(0).model;
            if STAGE2_SEEDS[i] == 0 {
                return base.clone();
            }
            let (deform, _) = train_stage2(&cfg(STAGE2_SEEDS[i]), &base.rigid, self.set()).expect("stage 2");
            ProposedModel { rigid: base.rigid.clone(), deform }
        })
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn gauss(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_unit_quaternion(rng: &mut impl Rng) -> Quaternion {
    loop {
        let q = Quaternion::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if let Ok(u) = q.normalized() {
            return u;
        }
    }
}

fn random_cloud(rng: &mut impl Rng, n: usize) -> Vec<Vec3> {
    (0..n).map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0))).collect()
}

fn c1_kabsch() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut rot_err, mut tr_err) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let x = random_cloud(&mut rng, 50);
        let r = quat_to_matrix(random_unit_quaternion(&mut rng));
        let t: Vec3 = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
        let y: Vec<Vec3> = x.iter().map(|p| add(mat_vec(&r, *p), t)).collect();
        let (r_hat, t_hat) = kabsch_extract(&x, &y).expect("kabsch");
        rot_err = rot_err.max(rotation_angle_between(&r, &r_hat));
        tr_err = tr_err.max(norm(sub(t_hat, t)));
    }
    let mut worst_margin = f64::INFINITY;
    let mut all_ok = true;
    for _ in 0..50 {
        let x = random_cloud(&mut rng, 50);
        let r = quat_to_matrix(random_unit_quaternion(&mut rng));
        let y: Vec<Vec3> = x
            .iter()
            .map(|p| add(mat_vec(&r, *p), std::array::from_fn(|_| 0.2 * gauss(&mut rng) + 1.0)))
            .collect();
        let (r_hat, t_hat) = kabsch_extract(&x, &y).expect("kabsch");
        let k = rigid_rmsd(&r_hat, t_hat, &x, &y);
        let (cx, cy) = (centroid(&x), centroid(&y));
        let best = (0..10_000)
            .map(|_| {
                let q = quat_to_matrix(random_unit_quaternion(&mut rng));
                rigid_rmsd(&q, sub(cy, mat_vec(&q, cx)), &x, &y)
            })
            .fold(f64::INFINITY, f64::min);
        all_ok &= k <= best;
        worst_margin = worst_margin.min(best - k);
    }
    let ok = rot_err < 1e-9 && tr_err < 1e-9 && all_ok;
    (ok, format!("max rotation error {rot_err:.2e} rad, max translation error {tr_err:.2e} m, min(best random - kabsch) RMSD {worst_margin:.2e}"))
}

/// Backward pass against central differences of `sum(upstream * output)`.
fn c2_gradients() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    let mut worst = Vec::new();
    for act in Activation::ALL {
        let mut max_rel = 0.0f64;
        for trial in 0..20 {
            let depth = rng.random_range(2..=4);
            let hidden = rng.random_range(3..=8);
            let (input, output) = (rng.random_range(1..=4), rng.random_range(1..=3));
            let net = mlp_init(NetworkConfig::new(depth, hidden, input, output).with_activation(act).with_seed(trial)).unwrap();
            let rows = 5;
            let batch = loop {
                let b = Matrix::from_vec(rows, input, (0..rows * input).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap();
                let pass = net.forward_pass(&b).unwrap();
                let near_kink = pass.pre_activations().iter().any(|z| z.as_slice().iter().any(|v| v.abs() < 1e-4));
                if act != Activation::Relu || !near_kink {
                    break b;
                }
            };
            let upstream = Matrix::from_vec(rows, output, (0..rows * output).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let grads = net.backward(&batch, &upstream).unwrap();
            let objective = |n: &crashdecomp::tensor_nn::Network| -> f64 {
                n.forward(&batch).unwrap().as_slice().iter().zip(upstream.as_slice()).map(|(y, g)| y * g).sum()
            };
            for p in 0..net.param_count() {
                let mut plus = net.clone();
                plus.params_mut()[p] += h;
                let mut minus = net.clone();
                minus.params_mut()[p] -= h;
                let numeric = (objective(&plus) - objective(&minus)) / (2.0 * h);
                let exact = grads.as_slice()[p];
                let rel = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-8);
                max_rel = max_rel.max(rel);
            }
        }
        worst.push((act, max_rel));
    }
    let ok = worst.iter().all(|(_, e)| *e < 1e-5);
    let detail = worst.iter().map(|(a, e)| format!("{}: {e:.2e}", a.name())).collect::<Vec<_>>().join(", ");
    (ok, format!("max relative error {detail}"))
}

fn c3_increments() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut rot_err, mut tr_err) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let axis0: Vec3 = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let w: Vec3 = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let a: Vec3 = std::array::from_fn(|_| rng.random_range(-20.0..20.0));
        let (mut rots, mut trans) = (Vec::new(), Vec::new());
        for k in 0..100 {
            let t = 0.004 * (k + 1) as f64;
            let axis = add(axis0, [0.3 * (w[0] * t).sin(), 0.3 * (w[1] * t).cos(), 0.1 * t]);
            rots.push(Quaternion::from_axis_angle(axis, 2.0 * (w[2] * t).sin() + t));
            trans.push(std::array::from_fn(|j| a[j] * t + 0.5 * (w[j] * t).sin()));
        }
        let (q, t) = compose_increments(&increments_from(&rots, &trans));
        for k in 0..100 {
            rot_err = rot_err.max(rots[k].angle_to(q[k]));
            tr_err = tr_err.max(norm(sub(trans[k], t[k])));
        }
    }
    (rot_err < 1e-9 && tr_err < 1e-9, format!("max rotation error {rot_err:.2e} rad, max translation error {tr_err:.2e} m"))
}

fn c4_double_cover() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut max_diff = 0.0f64;
    for _ in 0..1000 {
        let qh = random_unit_quaternion(&mut rng);
        let qs = random_unit_quaternion(&mut rng);
        let th: Vec3 = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let ts: Vec3 = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let a = rigid_loss(qh, th, qs, ts);
        let b = rigid_loss(qh, th, qs.scale(-1.0), ts);
        max_diff = max_diff.max((a - b).abs() / a.abs().max(f64::MIN_POSITIVE));
    }
    (max_diff <= f64::EPSILON, format!("max relative difference {max_diff:.2e} over 1000 pairs"))
}

fn c5_identity(fx: &'static Fixtures) -> (bool, String) {
    let set = fx.set();
    let mut mismatched = 0usize;
    for (traj, l) in fx.dataset.trajectories.iter().zip(&set.labels) {
        let rebuilt = reconstruct_total(&traj.x_init, l.centroid, &l.rigid_series(), &l.residuals).unwrap();
        mismatched += rebuilt.iter().zip(&traj.positions).filter(|(a, b)| a != b).count();
    }
    (mismatched == 0, format!("{mismatched} non-identical coordinates over {} scenarios", fx.dataset.len()))
}

fn c6_strategies(fx: &'static Fixtures) -> (bool, String) {
    let f: Vec<f64> = (0..3).map(|i| fx.frozen(i).report.best_val_loss().unwrap()).collect();
    let d: Vec<f64> = (0..3).map(|i| fx.joint(i).best_val_loss().unwrap()).collect();
    let u: Vec<f64> = (0..3).map(|i| fx.coupled(i).1.best_val_loss().unwrap()).collect();
    let (mf, md, mu) = (mean(&f), mean(&d), mean(&u));
    let minutes = fx.training_seconds.get() / 60.0;
    let params_f = fx.frozen(0).model.param_count();
    let params_u = fx.coupled(0).0.param_count();
    let ok = mf < md && mf <= 0.95 * mu && minutes <= 60.0;
    (
        ok,
        format!(
            "mean best val F {mf:.3e}, D {md:.3e}, coupled {mu:.3e} (F/coupled {:.3}); params F {params_f}, coupled {params_u}; {EPOCHS} epochs, {minutes:.1} min training",
            mf / mu
        ),
    )
}

fn c7_rigid_ablation(fx: &'static Fixtures) -> (bool, String) {
    let mut by_mode = Vec::new();
    for mode in [RotationMode::Euler, RotationMode::Quaternion] {
        let v: Vec<f64> = SEEDS
            .iter()
            .map(|&s| {
                let c = TrainConfig { rotation_mode: mode, ..cfg(s) };
                train_stage1(&c, fx.set()).unwrap().1.best_val_loss().unwrap()
            })
            .collect();
        by_mode.push(mean(&v));
    }
    // The strategy F runs use the incremental mode with identical settings.
    let c: Vec<f64> = (0..3).map(|i| fx.frozen(i).stage1.as_ref().unwrap().best_val_loss().unwrap()).collect();
    let (a, b, c) = (by_mode[0], by_mode[1], mean(&c));
    (c <= b && c < a, format!("mean rigid-only val MSE A {a:.3e}, B {b:.3e}, C {c:.3e}"))
}

fn c8_physical(fx: &'static Fixtures) -> (bool, String) {
    let ds = &fx.dataset;
    let grid = ds.grid;
    let x = &ds.trajectories[0].x_init;
    let c = centroid(x);
    let mut frontal = 0;
    let mut negative = 0;
    for (traj, truth) in ds.trajectories.iter().zip(&ds.truths) {
        if traj.scenario.theta >= 10.0 {
            continue;
        }
        frontal += 1;
        let rigid: Vec<_> = truth.rotations.iter().zip(&truth.translations).map(|(q, t)| crashdecomp::kinematics::RigidTransform::new(*q, *t)).collect();
        let rp = rigid_positions(x, c, &rigid);
        let curve = directional_consistency_curve(x, &rp, &truth.deformation, &grid).unwrap();
        if curve.min_in(truth.t_impact, truth.t_impact + 0.1).is_some_and(|v| v < 0.0) {
            negative += 1;
        }
    }
    let set = fx.set();
    let model = fx.anchored();
    let mut peaks = Vec::new();
    for &s in &set.val {
        let traj = &ds.trajectories[s];
        let d = model.deform.predict_trajectory(x, traj.scenario.eta(), &grid).unwrap();
        let curve = deformation_iou_curve(&d, &set.labels[s].residuals, x.len(), &grid, TOP_FRACTION).unwrap();
        peaks.push(curve.max().unwrap_or(0.0));
    }
    let hits = peaks.iter().filter(|&&p| p >= 0.5).count();
    let g = TimeGrid::default();
    let r = detect_phases(&analytic_phase_pulse(&g, 0.128, 0.212, 0.4), &g, PHASE_EPS, PHASE_DWELL).unwrap();
    let onset = r.onset_time.unwrap_or(f64::NAN);
    let phase_ok = (r.peak_time - 0.128).abs() <= g.dt + 1e-12 && (onset - 0.212).abs() <= g.dt + 1e-12;
    let ok = frontal > 0 && negative == frontal && peaks.len() == 8 && hits >= 6 && phase_ok;
    let peaks_txt = peaks.iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>().join(" ");
    (
        ok,
        format!(
            "C-bar < 0 in impact window for {negative}/{frontal} frontal scenarios; IoU peak >= 0.5 on {hits}/{} interp [{peaks_txt}]; phases ({:.3}, {onset:.3}) s",
            peaks.len(),
            r.peak_time
        ),
    )
}

fn c9_landscape(fx: &'static Fixtures) -> (bool, String) {
    let set = fx.set();
    let train = set.train_samples(0.002, 91).unwrap();
    let val = set.val_samples(0.005).unwrap();
    let base = fx.stage2(0);
    let probe = LossProbe::stage2(base, set, &train, &val).unwrap();
    let w = probe.params();
    let dirs = random_plane_directions(&w, &probe.param_blocks(), 7).unwrap();
    let plane = PlaneConfig { alpha: (-1.0, 1.0), beta: (-1.0, 1.0), resolution: (3, 3), jobs: 1 };
    let tl = |p: &[f64]| probe.train_loss(p);
    let vl = |p: &[f64]| probe.val_loss(p);
    let grid = landscape_2d(&tl, &vl, &w, &dirs.delta, &dirs.xi, &plane).unwrap();
    let (oi, oj) = grid.origin().unwrap();
    let origin_err = (grid.train_at(oi, oj).unwrap() - probe.train_loss(&w).unwrap())
        .abs()
        .max((grid.val_at(oi, oj).unwrap() - probe.val_loss(&w).unwrap()).abs());

    let stage2: Vec<Vec<f64>> = (0..STAGE2_SEEDS.len()).map(|i| probe.stage2_params(fx.stage2(i)).unwrap()).collect();
    let curve = interpolate_1d(&tl, &stage2[0], &stage2[1], 11).unwrap();
    let endpoint_err = (curve.losses[0].unwrap() - tl(&stage2[0]).unwrap())
        .abs()
        .max((curve.losses[10].unwrap() - tl(&stage2[1]).unwrap()).abs());
    let five = pairwise_connectivity(&stage2, &tl, 11, 1).unwrap();
    let three_stage2 = pairwise_connectivity(&stage2[..3], &tl, 11, 1).unwrap();

    let uprobe = LossProbe::unified(&fx.coupled(0).0, set, &train, &val);
    let unified: Vec<Vec<f64>> = (0..3).map(|i| uprobe.unified_params(&fx.coupled(i).0).unwrap()).collect();
    let ul = |p: &[f64]| uprobe.train_loss(p);
    let three_unified = pairwise_connectivity(&unified, &ul, 11, 1).unwrap();
    let (bu, bs) = (three_unified.mean_barrier().unwrap_or(f64::NAN), three_stage2.mean_barrier().unwrap_or(f64::NAN));
    let ok = origin_err <= 1e-12 && endpoint_err == 0.0 && five.curves.len() == 10 && bu >= bs;
    (
        ok,
        format!(
            "origin error {origin_err:.1e}, endpoint error {endpoint_err:.1e}, {} curves from 5 seeds; mean barrier unified {bu:.3e} vs stage-2 {bs:.3e} (3 seeds)",
            five.curves.len()
        ),
    )
}

fn c10_protocol() -> (bool, String) {
    let s = default_splits(0);
    let count = |sp: Split| s.iter().filter(|x| x.split == sp).count();
    let counts = (count(Split::Train), count(Split::Interp), count(Split::Extrap));
    let extrap: Vec<_> = s.iter().filter(|x| x.split == Split::Extrap).collect();
    let angles: Vec<f64> = extrap.iter().filter(|x| x.v != 97.0).map(|x| x.theta).collect();
    let splits_ok = counts == (20, 8, 9) && angles == (46..=53).map(f64::from).collect::<Vec<_>>() && extrap.iter().filter(|x| x.v == 97.0).count() == 1;

    let ranges = ParamRanges::default().as_array();
    let mut lhs_ok = true;
    for n in [5, 20, 50] {
        let sample = lhs_sample(n, &ParamRanges::default(), 10 + n as u64).unwrap();
        for (j, (lo, hi)) in ranges.iter().enumerate() {
            let mut strata: Vec<usize> = sample.iter().map(|x| (((x.eta()[j] - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)).collect();
            strata.sort_unstable();
            lhs_ok &= strata == (0..n).collect::<Vec<_>>();
        }
    }
    let mut sub_ok = true;
    let total = 20 * 100 * 500;
    for r in [0.01, 0.05, 0.1, 0.3, 1.0] {
        sub_ok &= subsample(20, 100, 500, r, 5).unwrap().len() == (r * total as f64).round() as usize;
    }
    (splits_ok && lhs_ok && sub_ok, format!("splits {counts:?}, extrap angles {angles:?}; LHS strata exact: {lhs_ok}; subsample counts exact: {sub_ok}"))
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |id: usize| wanted.is_empty() || wanted.contains(&id);
    let fx = Fixtures::new();
    let mut out = Outcome { failed: Vec::new() };
    type Check = Box<dyn Fn() -> (bool, String)>;
    let checks: Vec<(usize, &str, Option<f64>, Check)> = vec![
        (1, "Kabsch recovery and RMSD optimality", Some(10.0), Box::new(c1_kabsch)),
        (2, "backward pass vs central differences", Some(30.0), Box::new(c2_gradients)),
        (3, "increment decompose/compose round trip", None, Box::new(c3_increments)),
        (4, "double-cover sign invariance of the rigid loss", None, Box::new(c4_double_cover)),
        (5, "bit-exact decomposition identity", None, Box::new(move || c5_identity(fx))),
        (6, "strategy ordering F < D and F <= 0.95 coupled", None, Box::new(move || c6_strategies(fx))),
        (7, "rigid ablation C <= B, C < A", None, Box::new(move || c7_rigid_ablation(fx))),
        (8, "physical consistency suite", None, Box::new(move || c8_physical(fx))),
        (9, "landscape fidelity and barrier ordering", None, Box::new(move || c9_landscape(fx))),
        (10, "protocol fidelity", None, Box::new(c10_protocol)),
    ];
    for (id, name, limit, check) in checks {
        if !run(id) {
            continue;
        }
        let t = Instant::now();
        let (ok, mut detail) = check();
        let secs = t.elapsed().as_secs_f64();
        let in_time = limit.is_none_or(|l| secs < l);
        if let Some(l) = limit {
            detail.push_str(&format!("; limit {l:.0} s"));
        }
        out.record(id, name, ok && in_time, detail, secs);
    }
    if !out.failed.is_empty() {
        say(&format!("acceptance: {} criteria failed: {:?}", out.failed.len(), out.failed));
        std::process::exit(1);
    }
}

use crashdecomp::data::{generate_dataset, Dataset, GeneratorConfig, TimeGrid};
use crashdecomp::kinematics::{apply_rigid, centroid};
use crashdecomp::models::{rigidnet_rollout, RotationMode, UnifiedVariant};
use crashdecomp::training::*;

fn dataset(nodes: usize, steps: usize, generator: GeneratorConfig) -> Dataset {
    generate_dataset(nodes, 0, TimeGrid::new(0.4, steps).unwrap(), generator).unwrap()
}

fn small_cfg() -> TrainConfig {
    TrainConfig {
        epochs: 3,
        stage1_epochs: 3,
        pretrain_epochs: 2,
        batch_size: 256,
        rigid_batch_size: 25,
        rigid: ArchConfig::new(2, 32),
        deform: ArchConfig::new(2, 32),
        unified: ArchConfig::new(2, 32).with_fourier(Some(FourierSpec { mapping_size: 4, sigma: 1.0 })),
        oracle: ArchConfig::new(2, 32),
        ..Default::default()
    }
}

#[test]
fn zero_epochs_returns_init() {
    let ds = dataset(60, 20, GeneratorConfig::default());
    let set = TrainingSet::new(&ds).unwrap();
    let cfg = TrainConfig { stage1_epochs: 0, ..small_cfg() };
    let (model, report) = train_stage1(&cfg, &set).unwrap();
    assert_eq!(model.net.params(), init_rigidnet(&cfg, &set).unwrap().net.params());
    assert!(report.epochs.is_empty());
    assert_eq!(report.best_val_loss(), None);
}

#[test]
fn seeds_give_different_weights() {
    let ds = dataset(60, 20, GeneratorConfig::default());
    let set = TrainingSet::new(&ds).unwrap();
    let (a, ra) = train_stage1(&TrainConfig { seed: 1, ..small_cfg() }, &set).unwrap();
    let (b, rb) = train_stage1(&TrainConfig { seed: 2, ..small_cfg() }, &set).unwrap();
    assert_ne!(a.net.checksum(), b.net.checksum());
    assert_eq!(ra.epochs.len(), 3);
    assert_eq!(rb.epochs.len(), 3);
    assert!(ra.epochs.iter().chain(&rb.epochs).all(|e| e.train_loss.is_finite() && e.val_loss.is_finite()));
}

#[test]
fn stage2_keeps_rigidnet_and_targets_frozen() {
    let ds = dataset(60, 20, GeneratorConfig::default());
    let set = TrainingSet::new(&ds).unwrap();
    let cfg = small_cfg();
    let (rigid, _) = train_stage1(&cfg, &set).unwrap();
    let before = rigid.net.checksum();
    let samples = set.train_samples(cfg.ratio, 5).unwrap();
    let t0 = frozen_targets(&rigid, &set, &samples).unwrap();
    let (deform, report) = train_stage2(&cfg, &rigid, &set).unwrap();
    assert_eq!(rigid.net.checksum(), before);
    assert_eq!(frozen_targets(&rigid, &set, &samples).unwrap(), t0);
    assert_eq!(report.epochs.len(), cfg.epochs);
    assert_ne!(deform.net.checksum(), init_deformnet(&cfg, &set).unwrap().net.checksum());
}

#[test]
fn strategy_f_is_stage2_after_stage1() {
    let ds = dataset(60, 20, GeneratorConfig::default());
    let set = TrainingSet::new(&ds).unwrap();
    let cfg = small_cfg();
    let out = train_strategy(&cfg, &set).unwrap();
    let (rigid, _) = train_stage1(&cfg, &set).unwrap();
    let (deform, _) = train_stage2(&cfg, &rigid, &set).unwrap();
    assert_eq!(out.model.rigid.net.checksum(), rigid.net.checksum());
    assert_eq!(out.model.deform.net.checksum(), deform.net.checksum());
}

#[test]
fn identical_config_is_bit_reproducible() {
    let ds = dataset(60, 20, GeneratorConfig::default());
    let set = TrainingSet::new(&ds).unwrap();
    for strategy in [Strategy::D, Strategy::E] {
        let cfg = TrainConfig { strategy, ..small_cfg() };
        let a = train_strategy(&cfg, &set).unwrap();
        let b = train_strategy(&cfg, &set).unwrap();
        let losses = |o: &StrategyOutcome| o.report.epochs.iter().map(|e| (e.train_loss, e.val_loss)).collect::<Vec<_>>();
        assert_eq!(losses(&a), losses(&b));
        assert_eq!(a.model.rigid.net.checksum(), b.model.rigid.net.checksum());
        assert_eq!(a.model.deform.net.checksum(), b.model.deform.net.checksum());
        assert_eq!(a.stage1.is_some(), strategy == Strategy::E);
    }
}

#[test]
fn subsample_count_is_ratio_of_full_set() {
    let ds = dataset(60, 20, GeneratorConfig::default());
    let set = TrainingSet::new(&ds).unwrap();
    let full = set.train.len() * 20 * 60;
    assert_eq!(set.train_samples(0.1, 0).unwrap().len(), full / 10);
    assert_eq!(set.train_samples(1.0, 0).unwrap().len(), full);
    let s = set.train_samples(0.1, 0).unwrap();
    assert!(s.iter().all(|x| set.train.contains(&(x.scenario as usize))));
}

/// Trajectories generated by a RigidNet rollout have no deformation with
/// respect to that same network, so stage 2 must learn a zero field.
#[test]
fn zero_deformation_stage2_fits_residual() {
    let base = dataset(60, 20, GeneratorConfig { deformation_amplitude: 0.0, ..Default::default() });
    let cfg = TrainConfig { epochs: 10, ..small_cfg() };
    let (rigid, _) = train_stage1(&cfg, &TrainingSet::new(&base).unwrap()).unwrap();
    let mut ds = base.clone();
    for t in &mut ds.trajectories {
        let c = centroid(&t.x_init);
        let roll = rigidnet_rollout(&rigid, t.scenario.eta(), &base.grid).unwrap();
        t.positions = roll.iter().flat_map(|r| apply_rigid(&t.x_init, c, r)).collect();
    }
    let set = TrainingSet::new(&ds).unwrap();
    let (deform, report) = train_stage2(&cfg, &rigid, &set).unwrap();
    let disp: Vec<f64> = set
        .val
        .iter()
        .flat_map(|&s| {
            let t = &ds.trajectories[s];
            t.positions.iter().enumerate().map(move |(r, p)| {
                let x = t.x_init[r % t.n_nodes()];
                (0..3).map(|j| (p[j] - x[j]).powi(2)).sum::<f64>()
            })
        })
        .collect();
    let var = disp.iter().sum::<f64>() / disp.len() as f64;
    let best = report.best_val_loss().unwrap();
    assert!(best < 1e-4 * var, "stage-2 MSE {best:e} vs displacement variance {var:e}");
    let s = set.val[0];
    let d = deform.predict_trajectory(set.x_init(), set.eta(s), &ds.grid).unwrap();
    assert!(d.iter().flatten().all(|v| v.abs() < 1e-6));
}

#[test]
fn pure_rigid_translation_is_learned() {
    let ds = dataset(60, 100, GeneratorConfig { deformation_amplitude: 0.0, ..Default::default() });
    let set = TrainingSet::new(&ds).unwrap();
    let cfg = TrainConfig { stage1_epochs: 200, ..TrainConfig::default() };
    let (model, report) = train_stage1(&cfg, &set).unwrap();
    let curve = report.val_curve();
    assert!(report.best_val_loss().unwrap() <= curve[0]);
    let mut se = 0.0;
    let mut count = 0.0;
    let mut scale: f64 = 0.0;
    for &s in &set.val {
        let roll = rigidnet_rollout(&model, set.eta(s), &ds.grid).unwrap();
        for (k, r) in roll.iter().enumerate() {
            let t = set.labels[s].translations[k];
            scale = scale.max(t.iter().map(|v| v * v).sum::<f64>().sqrt());
            se += (0..3).map(|j| (r.translation[j] - t[j]).powi(2)).sum::<f64>();
            count += 1.0;
        }
    }
    let rmse = (se / count).sqrt();
    assert!(rmse < 0.02 * scale, "translation RMSE {rmse} vs scale {scale}");
}

#[test]
fn static_scene_unified_loss_vanishes() {
    let mut ds = dataset(60, 20, GeneratorConfig::default());
    for t in &mut ds.trajectories {
        let n = t.n_nodes();
        for (r, p) in t.positions.iter_mut().enumerate() {
            *p = t.x_init[r % n];
        }
    }
    let set = TrainingSet::new(&ds).unwrap();
    for variant in [UnifiedVariant::CoupledMlp, UnifiedVariant::DeepOnet] {
        let mut unified = ArchConfig::new(3, 64);
        unified.latent = 16;
        let cfg = TrainConfig { epochs: 40, unified, unified_variant: variant, ..small_cfg() };
        let (_, report) = train_unified(&cfg, &set).unwrap();
        let curve = report.val_curve();
        assert!(*curve.last().unwrap() < 1e-2 * curve[0], "{variant:?}: {curve:?}");
        assert_eq!(report.best_val_loss(), curve.iter().copied().reduce(f64::min));
    }
}

#[test]
fn rotation_modes_all_train() {
    let ds = dataset(50, 20, GeneratorConfig::default());
    let set = TrainingSet::new(&ds).unwrap();
    for mode in [RotationMode::Euler, RotationMode::Quaternion, RotationMode::Incremental] {
        let (_, r) = train_stage1(&TrainConfig { rotation_mode: mode, ..small_cfg() }, &set).unwrap();
        assert!(r.best_val_loss().unwrap().is_finite());
    }
}

#[test]
fn single_point_sweep_envelope_is_its_curve() {
    let ds = dataset(50, 20, GeneratorConfig::default());
    let set = TrainingSet::new(&ds).unwrap();
    let space = SweepSpace {
        depth: vec![2],
        hidden: vec![16, 32],
        latent: vec![8],
        activation: vec![crashdecomp::tensor_nn::Activation::Gelu],
        mapping_size: vec![2],
        sigma: vec![1.0],
    };
    let out = sweep(&space, 1, 0, &small_cfg(), &set, 1).unwrap();
    assert_eq!(out.runs.len(), 1);
    assert_eq!(out.envelope, out.runs[0].report.as_ref().unwrap().val_curve());
    let two = sweep(&space, 2, 0, &small_cfg(), &set, 2).unwrap();
    assert_eq!(two.stats.completed, 2);
    let dir = tempfile::tempdir().unwrap();
    two.write(dir.path()).unwrap();
    assert!(dir.path().join("envelope.csv").exists());
    assert!(dir.path().join("run_001.csv").exists());
}

#[test]
fn oracles_train() {
    let ds = dataset(50, 20, GeneratorConfig::default());
    let set = TrainingSet::new(&ds).unwrap();
    for kind in [crashdecomp::models::OracleKind::Deformation, crashdecomp::models::OracleKind::Rigid] {
        let (_, r) = train_oracle(kind, &small_cfg(), &set).unwrap();
        assert_eq!(r.epochs.len(), 3);
    }
}

#[test]
fn invalid_config_is_rejected() {
    let ds = dataset(50, 20, GeneratorConfig::default());
    let set = TrainingSet::new(&ds).unwrap();
    assert!(train_stage1(&TrainConfig { ratio: 0.0, ..small_cfg() }, &set).is_err());
    assert!(train_unified(&TrainConfig { batch_size: 0, ..small_cfg() }, &set).is_err());
    assert!("G".parse::<Strategy>().is_err());
}

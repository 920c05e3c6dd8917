//! Losses, the three training strategies, baselines and sweeps.
//!
//! - `F`: RigidNet fitted on labels, frozen, then DeformationNet fitted on
//!   the residual with respect to the frozen rollout.
//! - `D`: both networks trained from scratch on the total-field MSE.
//! - `E`: RigidNet pretrained on labels, then both trained jointly.
//!
//! All per-node objectives are mean squared errors over a fixed random
//! subset of (scenario, time, node) triples, reshuffled every epoch.

mod config;
mod learner;
mod losses;
mod report;
mod rollout;
mod set;
mod stages;
mod sweep;

pub use config::{derive_seed, ArchConfig, FourierSpec, LrSchedule, Strategy, TrainConfig};
pub use losses::{deformation_loss, deformation_target, rigid_loss, rigid_loss_mean};
pub use report::{EpochRecord, ReportSummary, TrainReport};
pub use set::TrainingSet;
pub use stages::{
    frozen_targets, init_deformnet, init_rigidnet, proposed_mse, rigid_only_mse, rigid_targets, train_oracle, train_stage1,
    train_stage2, train_strategy, train_unified, StrategyOutcome,
};
pub use sweep::{envelope, sweep, sweep_points, SweepOutcome, SweepPoint, SweepRun, SweepSpace, SweepStats};


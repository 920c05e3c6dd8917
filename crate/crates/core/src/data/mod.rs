//! Scenario sampling, the synthetic trajectory generator, spatio-temporal
//! subsampling and dataset files.

mod generator;
mod io;
mod mesh;
mod scenario;
mod subsample;
mod trajectory;

pub use generator::{place, synth_trajectory, synth_trajectory_with, GeneratorConfig, SyntheticGroundTruth};
pub use io::{generate_dataset, generate_scenarios, read_dataset, write_dataset, Dataset, DATASET_FORMAT_VERSION};
pub use mesh::{bounds_of, build_mesh, Mesh, FRONT_FRACTION, VEHICLE_HEIGHT, VEHICLE_LENGTH, VEHICLE_WIDTH};
pub use scenario::{
    default_splits, lhs_sample, lhs_unit, ParamRanges, Scenario, Split, EXTRAP_ANGLE_CASE_V, EXTRAP_D,
    EXTRAP_R_OFFSET, EXTRAP_VELOCITY, EXTRAP_VELOCITY_CASE_THETA,
};
pub use subsample::{subsample, SampleIndex, SampleIndexSet};
pub use trajectory::{TimeGrid, Trajectory};

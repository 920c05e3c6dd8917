//! Quaternion algebra, rigid transforms, Kabsch label extraction and the
//! incremental motion scheme.
//!
//! Quaternions are scalar-first `(q0, q1, q2, q3)` with the Hamilton product
//! in right-handed frames. A rigid transform acts as `R (x - c) + c + T`
//! about the centroid `c` of the initial configuration.

mod increments;
mod kabsch;
mod labels;
mod quaternion;
mod svd;

pub use increments::{compose_increments, increment_targets, increments_from, IncrementSeries};
pub use kabsch::{about_centroid, centroid, kabsch_extract, rigid_rmsd};
pub use labels::{
    apply_rigid, extract_labels, read_labels, rigid_point, write_labels, DecompositionLabels, RigidTransform,
    LABELS_FORMAT_VERSION,
};
pub use quaternion::{
    det3, mat_mul, mat_vec, matrix_to_quat, quat_double_cover_distance, quat_multiply, quat_normalize,
    quat_to_matrix, rotation_angle_between, transpose, Quaternion,
};
pub use svd::{svd3, Svd3};

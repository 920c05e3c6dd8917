//! Accuracy and physical-consistency metrics.
//!
//! - RMSE per node and per step.
//! - Directional consistency: mean cosine between each node's rigid
//!   displacement and its deformation.
//! - Crush-zone IoU of the top 15% deformation-magnitude nodes.
//! - Normalized deformation magnitude and its phase times.
//! - STFT spectrograms of node signals.

mod metrics;
mod phases;
mod series;
mod spectral;
mod suite;

pub use metrics::{
    deformation_iou, deformation_iou_curve, directional_consistency, directional_consistency_curve, magnitude,
    normalized_magnitude, rmse_curve, rmse_field, top_set, DIRECTION_EPS, TOP_FRACTION,
};
pub use phases::{analytic_phase_pulse, detect_phases, time_derivative, PhaseReport, PHASE_DWELL, PHASE_EPS};
pub use series::{aggregate, MetricSeries};
pub use spectral::{hann, stft_spectrogram, Spectrogram, STFT_HOP, STFT_WINDOW};
pub use suite::{evaluate_suite, MetricKind, MetricSummary, MetricsBundle, ScenarioFields, ScenarioMetrics};

/// Impact window length after `t_impact` used when reporting peak
/// directional consistency.
pub const IMPACT_WINDOW: f64 = 0.1;

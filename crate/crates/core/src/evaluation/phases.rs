use serde::{Deserialize, Serialize};

use crate::data::TimeGrid;
use crate::{Error, Result};

pub const PHASE_EPS: f64 = 0.05;
pub const PHASE_DWELL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub peak_time: f64,
    /// First time after the peak from which `|dM/dt| <= eps` holds for the
    /// whole dwell window; `None` when no such window fits in the grid.
    pub onset_time: Option<f64>,
    pub eps: f64,
    pub dwell: f64,
}

/// Central differences in the interior, one-sided at both ends.
pub fn time_derivative(m: &[f64], dt: f64) -> Vec<f64> {
    let n = m.len();
    (0..n)
        .map(|k| match (k, n) {
            (_, 0 | 1) => 0.0,
            (0, _) => (m[1] - m[0]) / dt,
            (k, n) if k == n - 1 => (m[k] - m[k - 1]) / dt,
            (k, _) => (m[k + 1] - m[k - 1]) / (2.0 * dt),
        })
        .collect()
}

/// Peak of `m` and onset of the stabilized regime.
///
/// Stability is judged on the central difference at each half step,
/// `(m[k+1] - m[k]) / dt`, so the onset is the first sample from which the
/// signal stays within `eps` of flat for `dwell`. The full-step central
/// difference at the first plateau sample still sees the previous, decaying
/// sample and would delay the onset by one extra step.
pub fn detect_phases(m: &[f64], grid: &TimeGrid, eps: f64, dwell: f64) -> Result<PhaseReport> {
    if m.len() != grid.n_steps || m.is_empty() {
        return Err(Error::Shape(format!("{} magnitude values for {} steps", m.len(), grid.n_steps)));
    }
    let peak = m.iter().enumerate().fold(0, |best, (k, v)| if *v > m[best] { k } else { best });
    let half: Vec<f64> = m.windows(2).map(|w| (w[1] - w[0]) / grid.dt).collect();
    let span = ((dwell / grid.dt - 1e-9).ceil() as usize).max(1);
    let onset = (peak + 1..m.len())
        .find(|&k| k + span < m.len() && half[k..k + span].iter().all(|v| v.abs() <= eps))
        .map(|k| grid.time(k));
    Ok(PhaseReport { peak_time: grid.time(peak), onset_time: onset, eps, dwell })
}

/// Raised-cosine rise to 1 at `peak`, cosine decay to `plateau` at `onset`,
/// then constant.
pub fn analytic_phase_pulse(grid: &TimeGrid, peak: f64, onset: f64, plateau: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    grid.times()
        .into_iter()
        .map(|t| {
            if t <= peak {
                0.5 * (1.0 - (PI * t / peak).cos())
            } else if t < onset {
                plateau + (1.0 - plateau) * 0.5 * (1.0 + (PI * (t - peak) / (onset - peak)).cos())
            } else {
                plateau
            }
        })
        .collect()
}

use serde::{Deserialize, Serialize};

use crate::data::{bounds_of, ParamRanges};
use crate::{Error, Result, Vec3};

/// Min-max scaling of network inputs to `[0, 1]`: `eta` by the sampling
/// ranges, `t` by the grid end time and `x_init` by its bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputNormalizer {
    pub eta_lo: [f64; 4],
    pub eta_hi: [f64; 4],
    pub t_end: f64,
    pub x_lo: Vec3,
    pub x_hi: Vec3,
}

impl Default for InputNormalizer {
    fn default() -> Self {
        Self::new(&ParamRanges::default(), 0.4, &[[0.0; 3], [1.0; 3]])
    }
}

impl InputNormalizer {
    pub fn new(ranges: &ParamRanges, t_end: f64, x_init: &[Vec3]) -> Self {
        let r = ranges.as_array();
        let b = bounds_of(x_init);
        Self {
            eta_lo: r.map(|v| v.0),
            eta_hi: r.map(|v| v.1),
            t_end,
            x_lo: b.map(|v| v.0),
            x_hi: b.map(|v| v.1),
        }
    }

    pub fn eta(&self, eta: [f64; 4]) -> [f64; 4] {
        std::array::from_fn(|j| (eta[j] - self.eta_lo[j]) / (self.eta_hi[j] - self.eta_lo[j]))
    }

    pub fn t(&self, t: f64) -> f64 {
        t / self.t_end
    }

    pub fn x(&self, x: Vec3) -> Vec3 {
        std::array::from_fn(|j| {
            let w = self.x_hi[j] - self.x_lo[j];
            if w > 0.0 { (x[j] - self.x_lo[j]) / w } else { 0.0 }
        })
    }

    /// `[t, eta]` row for the rigid network.
    pub fn rigid_row(&self, t: f64, eta: [f64; 4], out: &mut [f64]) {
        out[0] = self.t(t);
        out[1..5].copy_from_slice(&self.eta(eta));
    }

    /// `[x, t, eta]` row for the per-node networks.
    pub fn node_row(&self, x: Vec3, t: f64, eta: [f64; 4], out: &mut [f64]) {
        out[..3].copy_from_slice(&self.x(x));
        out[3] = self.t(t);
        out[4..8].copy_from_slice(&self.eta(eta));
    }
}

/// Per-channel `y = offset + scale * raw` applied to network outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputScaling {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl OutputScaling {
    pub fn identity(width: usize) -> Self {
        Self { offset: vec![0.0; width], scale: vec![1.0; width] }
    }

    /// Mean and standard deviation of each column of `targets` (row-major,
    /// `width` columns). The scale is floored at `1e-8` so that constant
    /// channels stay pinned to their mean.
    pub fn fit(targets: &[f64], width: usize) -> Result<Self> {
        if width == 0 || targets.is_empty() || targets.len() % width != 0 {
            return Err(Error::Shape(format!("cannot fit output scaling: {} values, width {width}", targets.len())));
        }
        let n = (targets.len() / width) as f64;
        let mut mean = vec![0.0; width];
        for row in targets.chunks_exact(width) {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; width];
        for row in targets.chunks_exact(width) {
            for j in 0..width {
                var[j] += (row[j] - mean[j]).powi(2) / n;
            }
        }
        let scale = var.iter().map(|v| v.sqrt().max(1e-8)).collect();
        Ok(Self { offset: mean, scale })
    }

    pub fn width(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, raw: &[f64], out: &mut [f64]) {
        for j in 0..self.offset.len() {
            out[j] = self.offset[j] + self.scale[j] * raw[j];
        }
    }
}

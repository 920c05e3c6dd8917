use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::{Error, Result, Vec3};

/// Sample times `t_k = (k + 1) dt` for `k < n_steps`, ending at `t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_steps: usize,
    pub dt: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { t_end: 0.4, n_steps: 100, dt: 0.004 }
    }
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 || !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::Config(format!("invalid time grid: t_end {t_end}, n_steps {n_steps}")));
        }
        Ok(Self { t_end, n_steps, dt: t_end / n_steps as f64 })
    }

    pub fn time(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_steps).map(|k| self.time(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x_init: Vec<Vec3>,
    /// `n_steps * n_nodes` positions, time-major.
    pub positions: Vec<Vec3>,
    pub grid: TimeGrid,
    pub scenario: Scenario,
}

impl Trajectory {
    pub fn n_nodes(&self) -> usize {
        self.x_init.len()
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    pub fn frame(&self, k: usize) -> &[Vec3] {
        let n = self.n_nodes();
        &self.positions[k * n..(k + 1) * n]
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.n_steps() * self.n_nodes();
        if self.positions.len() != expected {
            return Err(Error::Shape(format!(
                "trajectory has {} positions, expected {} steps x {} nodes",
                self.positions.len(),
                self.n_steps(),
                self.n_nodes()
            )));
        }
        let finite = |v: &Vec3| v.iter().all(|x| x.is_finite());
        if !self.x_init.iter().all(finite) || !self.positions.iter().all(finite) {
            return Err(Error::Degenerate("trajectory contains non-finite coordinates".into()));
        }
        Ok(())
    }
}

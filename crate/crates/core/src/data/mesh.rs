use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Box-shaped vehicle node cloud, heading along `+x`, centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub x_init: Vec<Vec3>,
    /// Nodes within the leading 20% of the vehicle length.
    pub front_mask: Vec<bool>,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

pub const VEHICLE_LENGTH: f64 = 4.5;
pub const VEHICLE_WIDTH: f64 = 1.8;
pub const VEHICLE_HEIGHT: f64 = 1.4;
pub const FRONT_FRACTION: f64 = 0.2;

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.x_init.len()
    }

    pub fn front_count(&self) -> usize {
        self.front_mask.iter().filter(|&&m| m).count()
    }

    /// Per-axis `(min, max)` of the node coordinates.
    pub fn bounds(&self) -> [(f64, f64); 3] {
        bounds_of(&self.x_init)
    }

    pub fn front_x(&self) -> f64 {
        self.bounds()[0].1
    }
}

pub fn bounds_of(points: &[Vec3]) -> [(f64, f64); 3] {
    let mut b = [(f64::INFINITY, f64::NEG_INFINITY); 3];
    for p in points {
        for k in 0..3 {
            b[k].0 = b[k].0.min(p[k]);
            b[k].1 = b[k].1.max(p[k]);
        }
    }
    b
}

/// Regular lattice with exactly `n` nodes. The lattice spacing starts at
/// `(L W H / n)^(1/3)` and shrinks until enough points exist; the surplus is
/// removed from the rear layer.
pub fn build_mesh(n: usize) -> Result<Mesh> {
    if n < 50 {
        return Err(Error::Config(format!("mesh needs at least 50 nodes, got {n}")));
    }
    let (l, w, h) = (VEHICLE_LENGTH, VEHICLE_WIDTH, VEHICLE_HEIGHT);
    let mut spacing = (l * w * h / n as f64).cbrt();
    let counts = loop {
        let c = [(l / spacing).round() as usize + 1, (w / spacing).round() as usize + 1, (h / spacing).round() as usize + 1];
        if c[0] * c[1] * c[2] >= n {
            break c;
        }
        spacing *= 0.99;
    };
    let step = |len: f64, c: usize| len / (c - 1) as f64;
    let (sx, sy, sz) = (step(l, counts[0]), step(w, counts[1]), step(h, counts[2]));
    let mut pts = Vec::with_capacity(n);
    // Front layers first so truncation only touches the rearmost layer.
    'outer: for i in (0..counts[0]).rev() {
        for j in 0..counts[1] {
            for k in 0..counts[2] {
                if pts.len() == n {
                    break 'outer;
                }
                pts.push([i as f64 * sx, j as f64 * sy - 0.5 * w, k as f64 * sz - 0.5 * h]);
            }
        }
    }
    let mut mean = [0.0; 3];
    for p in &pts {
        for k in 0..3 {
            mean[k] += p[k] / n as f64;
        }
    }
    // Second pass absorbs the rounding of the first.
    for _ in 0..2 {
        for p in pts.iter_mut() {
            for k in 0..3 {
                p[k] -= mean[k];
            }
        }
        mean = [0.0; 3];
        for p in &pts {
            for k in 0..3 {
                mean[k] += p[k];
            }
        }
        mean = mean.map(|m| m / n as f64);
    }
    let b = bounds_of(&pts);
    let cut = b[0].1 - FRONT_FRACTION * (b[0].1 - b[0].0);
    let front_mask = pts.iter().map(|p| p[0] >= cut - 1e-9).collect();
    Ok(Mesh { x_init: pts, front_mask, length: b[0].1 - b[0].0, width: w, height: h })
}

//! Loss-landscape probes: surfaces over a random filter-normalized plane
//! through a trained minimum, and linear paths between minima reached from
//! different seeds.

mod directions;
mod grid;
mod interp;
mod probe;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

pub use directions::{random_plane_directions, PlaneDirections};
pub use grid::{axis, landscape_2d, LandscapeGrid, PlaneConfig};
pub use interp::{interpolate_1d, pairwise_connectivity, Connectivity, InterpolationCurve};
pub use probe::{LossProbe, ProbeData};

use crate::Result;

/// Pure loss of a flat parameter vector.
pub type LossFn<'a> = dyn Fn(&[f64]) -> Result<f64> + Sync + 'a;

/// `f(0..n)` on up to `jobs` threads, collected in index order.
pub(crate) fn par_map<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= n {
                    break;
                }
                let v = f(k);
                slots.lock().unwrap()[k] = Some(v);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|v| v.expect("every index evaluated")).collect()
}

#[derive(Serialize)]
struct DirectionSidecar<'a> {
    seed: u64,
    n_params: usize,
    skipped_blocks: &'a [usize],
    normalization: &'static str,
    config: &'a PlaneConfig,
}

/// Writes `surface.csv` and `directions.json` into `dir`.
pub fn write_surface(dir: &Path, grid: &LandscapeGrid, dirs: &PlaneDirections, cfg: &PlaneConfig) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let csv = dir.join("surface.csv");
    std::fs::write(&csv, grid.to_csv()).map_err(|e| crate::Error::io(&csv, e))?;
    let side = DirectionSidecar {
        seed: dirs.seed,
        n_params: dirs.delta.len(),
        skipped_blocks: &dirs.skipped_blocks,
        normalization: "filter: per weight matrix and per bias vector",
        config: cfg,
    };
    let json = dir.join("directions.json");
    std::fs::write(&json, serde_json::to_string_pretty(&side)?).map_err(|e| crate::Error::io(&json, e))?;
    Ok(())
}

/// Writes `curves.csv` and `barriers.json` into `dir`.
pub fn write_connectivity(dir: &Path, c: &Connectivity) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let csv = dir.join("curves.csv");
    std::fs::write(&csv, c.to_csv()).map_err(|e| crate::Error::io(&csv, e))?;
    let json = dir.join("barriers.json");
    let body = serde_json::json!({ "barriers": c.barriers, "mean_barrier": c.mean_barrier(), "n_curves": c.curves.len() });
    std::fs::write(&json, serde_json::to_string_pretty(&body)?).map_err(|e| crate::Error::io(&json, e))?;
    Ok(())
}

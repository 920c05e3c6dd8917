//! Linear paths between independently trained minima.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::grid::finite;
use super::{par_map, LossFn};
use crate::{Error, Result};

/// Losses along `(1 - lambda) w_i + lambda w_j` for `lambda` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationCurve {
    pub pair: (usize, usize),
    pub lambdas: Vec<f64>,
    pub losses: Vec<Option<f64>>,
}

impl InterpolationCurve {
    /// Highest loss on the path above the higher endpoint. Undefined when
    /// an endpoint is missing.
    pub fn barrier(&self) -> Option<f64> {
        let ends = self.losses.first().copied()??.max(self.losses.last().copied()??);
        let peak = self.losses.iter().flatten().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        Some(peak - ends)
    }
}

fn lambdas(n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n).map(|k| k as f64 / m).collect()
}

fn path_point(wi: &[f64], wj: &[f64], l: f64) -> Vec<f64> {
    if l == 0.0 {
        return wi.to_vec();
    }
    if l == 1.0 {
        return wj.to_vec();
    }
    wi.iter().zip(wj).map(|(a, b)| (1.0 - l) * a + l * b).collect()
}

fn curve(loss: &LossFn, wi: &[f64], wj: &[f64], n: usize, jobs: usize, pair: (usize, usize)) -> Result<InterpolationCurve> {
    if wi.len() != wj.len() {
        return Err(Error::Shape(format!("cannot interpolate between {} and {} parameters", wi.len(), wj.len())));
    }
    if n < 2 {
        return Err(Error::Config("interpolation needs at least the two endpoints".into()));
    }
    let lambdas = lambdas(n);
    let losses = par_map(n, jobs, |k| finite(loss(&path_point(wi, wj, lambdas[k])))).into_iter().collect::<Result<_>>()?;
    Ok(InterpolationCurve { pair, lambdas, losses })
}

pub fn interpolate_1d(loss: &LossFn, wi: &[f64], wj: &[f64], n_samples: usize) -> Result<InterpolationCurve> {
    curve(loss, wi, wj, n_samples, 1, (0, 1))
}

/// Every pairwise curve with the symmetric matrix of barriers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connectivity {
    pub curves: Vec<InterpolationCurve>,
    pub barriers: Vec<Vec<Option<f64>>>,
}

impl Connectivity {
    pub fn mean_barrier(&self) -> Option<f64> {
        let b: Vec<f64> = self.curves.iter().filter_map(|c| c.barrier()).collect();
        (!b.is_empty()).then(|| b.iter().sum::<f64>() / b.len() as f64)
    }

    /// `pair_i,pair_j,lambda,loss`, missing losses left empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pair_i,pair_j,lambda,loss\n");
        for c in &self.curves {
            for (l, v) in c.lambdas.iter().zip(&c.losses) {
                let v = v.map(|x| format!("{x:e}")).unwrap_or_default();
                let _ = writeln!(s, "{},{},{l},{v}", c.pair.0, c.pair.1);
            }
        }
        s
    }
}

pub fn pairwise_connectivity(checkpoints: &[Vec<f64>], loss: &LossFn, n_samples: usize, jobs: usize) -> Result<Connectivity> {
    let k = checkpoints.len();
    if k < 2 {
        return Err(Error::Config(format!("pairwise interpolation needs at least 2 checkpoints, got {k}")));
    }
    let mut curves = Vec::with_capacity(k * (k - 1) / 2);
    let mut barriers = vec![vec![Some(0.0); k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let c = curve(loss, &checkpoints[i], &checkpoints[j], n_samples, jobs, (i, j))?;
            barriers[i][j] = c.barrier();
            barriers[j][i] = c.barrier();
            curves.push(c);
        }
    }
    Ok(Connectivity { curves, barriers })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(p: &[f64]) -> Result<f64> {
        Ok(p.iter().map(|x| (x - 1.0) * (x - 1.0)).sum())
    }

    #[test]
    fn endpoints_exact_and_convex_barrier() {
        let wi = vec![0.3, -2.0, 4.0];
        let wj = vec![1.7, 2.5, 0.1];
        let c = interpolate_1d(&bowl, &wi, &wj, 11).unwrap();
        assert_eq!(c.losses[0], Some(bowl(&wi).unwrap()));
        assert_eq!(c.losses[10], Some(bowl(&wj).unwrap()));
        assert!(c.barrier().unwrap() <= 0.0);
        let v: Vec<f64> = c.losses.iter().map(|v| v.unwrap()).collect();
        for k in 1..10 {
            assert!(v[k] <= 0.5 * (v[k - 1] + v[k + 1]) + 1e-12);
        }
    }

    #[test]
    fn double_well_has_positive_barrier() {
        let well = |p: &[f64]| -> Result<f64> { Ok((p[0] * p[0] - 1.0).powi(2)) };
        let c = interpolate_1d(&well, &[-1.0], &[1.0], 21).unwrap();
        assert!((c.barrier().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_checkpoints_are_flat() {
        let w = vec![0.2, 0.4];
        let c = pairwise_connectivity(&[w.clone(), w.clone()], &bowl, 7, 1).unwrap();
        assert_eq!(c.curves.len(), 1);
        assert!(c.curves[0].losses.iter().all(|v| *v == c.curves[0].losses[0]));
        assert_eq!(c.barriers[0][1], Some(0.0));
        assert_eq!(c.barriers[1][0], Some(0.0));
    }

    #[test]
    fn five_checkpoints_ten_pairs() {
        let ws: Vec<Vec<f64>> = (0..5).map(|s| vec![s as f64, -(s as f64)]).collect();
        let c = pairwise_connectivity(&ws, &bowl, 5, 2).unwrap();
        assert_eq!(c.curves.len(), 10);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(c.barriers[i][j], c.barriers[j][i]);
            }
        }
        assert_eq!(c.to_csv().lines().count(), 51);
    }

    #[test]
    fn errors() {
        assert!(interpolate_1d(&bowl, &[0.0], &[0.0, 1.0], 5).is_err());
        assert!(pairwise_connectivity(&[vec![0.0]], &bowl, 5, 1).is_err());
        assert!(interpolate_1d(&bowl, &[0.0], &[1.0], 1).is_err());
    }
}

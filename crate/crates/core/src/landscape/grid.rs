//! Loss surfaces over a two-dimensional plane in parameter space.

use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{par_map, LossFn};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneConfig {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    /// Points per axis `(alpha, beta)`.
    pub resolution: (usize, usize),
    pub jobs: usize,
}

impl Default for PlaneConfig {
    fn default() -> Self {
        Self { alpha: (-1.0, 1.0), beta: (-1.0, 1.0), resolution: (25, 25), jobs: 1 }
    }
}

/// Evenly spaced axis; a single point sits at the middle of the range.
pub fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
    let (lo, hi) = range;
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let m = (n - 1) as f64;
    (0..n).map(|i| (lo * (m - i as f64) + hi * i as f64) / m).collect()
}

/// Train and validation losses on `w + alpha delta + beta xi`. Cells are
/// stored alpha-major; a non-finite loss is a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub train: Vec<Option<f64>>,
    pub val: Vec<Option<f64>>,
    pub abs_diff: Vec<Option<f64>>,
    pub train_min: Option<(usize, usize)>,
    pub val_min: Option<(usize, usize)>,
}

fn argmin(values: &[Option<f64>], nb: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((k, v));
            }
        }
    }
    best.map(|(k, _)| (k / nb, k % nb))
}

impl LandscapeGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.betas.len() + j
    }

    pub fn train_at(&self, i: usize, j: usize) -> Option<f64> {
        self.train[self.index(i, j)]
    }

    pub fn val_at(&self, i: usize, j: usize) -> Option<f64> {
        self.val[self.index(i, j)]
    }

    /// Cell sitting exactly on the reference parameters, if the axes contain 0.
    pub fn origin(&self) -> Option<(usize, usize)> {
        let i = self.alphas.iter().position(|&a| a == 0.0)?;
        let j = self.betas.iter().position(|&b| b == 0.0)?;
        Some((i, j))
    }

    pub fn n_missing(&self) -> usize {
        self.train.iter().chain(&self.val).filter(|v| v.is_none()).count()
    }

    /// `alpha,beta,train_loss,val_loss,abs_diff`, missing cells left empty.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut s = String::from("alpha,beta,train_loss,val_loss,abs_diff\n");
        for (i, a) in self.alphas.iter().enumerate() {
            for (j, b) in self.betas.iter().enumerate() {
                let k = self.index(i, j);
                let _ = writeln!(s, "{a},{b},{},{},{}", cell(self.train[k]), cell(self.val[k]), cell(self.abs_diff[k]));
            }
        }
        s
    }
}

pub(crate) fn finite(v: Result<f64>) -> Result<Option<f64>> {
    let x = v?;
    Ok(x.is_finite().then_some(x))
}

pub fn landscape_2d(
    train: &LossFn,
    val: &LossFn,
    w: &[f64],
    delta: &[f64],
    xi: &[f64],
    cfg: &PlaneConfig,
) -> Result<LandscapeGrid> {
    if delta.len() != w.len() || xi.len() != w.len() {
        return Err(Error::Shape(format!("directions of length {} and {} for {} parameters", delta.len(), xi.len(), w.len())));
    }
    let (na, nb) = cfg.resolution;
    if na == 0 || nb == 0 {
        return Err(Error::Config("landscape resolution must be at least 1 per axis".into()));
    }
    let alphas = axis(cfg.alpha, na);
    let betas = axis(cfg.beta, nb);
    let cells = par_map(na * nb, cfg.jobs, |k| -> Result<(Option<f64>, Option<f64>)> {
        let (a, b) = (alphas[k / nb], betas[k % nb]);
        let p: Vec<f64> = if a == 0.0 && b == 0.0 {
            w.to_vec()
        } else {
            w.iter().zip(delta).zip(xi).map(|((w, d), x)| w + a * d + b * x).collect()
        };
        Ok((finite(train(&p))?, finite(val(&p))?))
    });
    let mut tr = Vec::with_capacity(na * nb);
    let mut va = Vec::with_capacity(na * nb);
    for c in cells {
        let (t, v) = c?;
        tr.push(t);
        va.push(v);
    }
    let abs_diff: Vec<Option<f64>> = tr.iter().zip(&va).map(|(t, v)| Some((t.as_ref()? - v.as_ref()?).abs())).collect();
    let grid = LandscapeGrid {
        train_min: argmin(&tr, nb),
        val_min: argmin(&va, nb),
        alphas,
        betas,
        train: tr,
        val: va,
        abs_diff,
    };
    let missing = grid.n_missing();
    if missing > 0 {
        warn!("{missing} landscape cells had non-finite losses");
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(p: &[f64]) -> Result<f64> {
        Ok(p.iter().map(|x| x * x).sum())
    }

    #[test]
    fn axis_endpoints_and_center() {
        assert_eq!(axis((-1.0, 1.0), 25)[12], 0.0);
        assert_eq!(axis((-1.0, 1.0), 25)[0], -1.0);
        assert_eq!(axis((-1.0, 1.0), 25)[24], 1.0);
        assert_eq!(axis((-2.0, 2.0), 1), vec![0.0]);
    }

    #[test]
    fn paraboloid() {
        let w = vec![0.5, -0.25, 0.0];
        let delta = vec![1.0, 0.0, 0.0];
        let xi = vec![0.0, 0.0, 1.0];
        let cfg = PlaneConfig { resolution: (5, 5), jobs: 2, ..Default::default() };
        let g = landscape_2d(&sq, &sq, &w, &delta, &xi, &cfg).unwrap();
        for (i, a) in g.alphas.iter().enumerate() {
            for (j, b) in g.betas.iter().enumerate() {
                let expect = (0.5 + a) * (0.5 + a) + b * b + 0.0625;
                assert!((g.train_at(i, j).unwrap() - expect).abs() < 1e-12);
            }
        }
        assert_eq!(g.train_min, Some((1, 2)));
        assert_eq!(g.origin(), Some((2, 2)));
        assert_eq!(g.train_at(2, 2), Some(sq(&w).unwrap()));
    }

    #[test]
    fn single_cell_is_reference_loss() {
        let w = vec![0.3, 0.7];
        let d = vec![1.0, 2.0];
        let cfg = PlaneConfig { resolution: (1, 1), ..Default::default() };
        let g = landscape_2d(&sq, &sq, &w, &d, &d, &cfg).unwrap();
        assert_eq!(g.train, vec![Some(sq(&w).unwrap())]);
    }

    #[test]
    fn abs_diff_and_missing_cells() {
        let val = |p: &[f64]| -> Result<f64> { Ok(if p[0] > 0.9 { f64::NAN } else { 2.0 * p[0] }) };
        let w = vec![0.0];
        let cfg = PlaneConfig { resolution: (3, 1), ..Default::default() };
        let g = landscape_2d(&sq, &val, &w, &[1.0], &[0.0], &cfg).unwrap();
        assert_eq!(g.val, vec![Some(-2.0), Some(0.0), None]);
        assert_eq!(g.abs_diff, vec![Some(3.0), Some(0.0), None]);
        assert_eq!(g.val_min, Some((0, 0)));
        assert_eq!(g.to_csv().lines().count(), 4);
        assert!(g.to_csv().ends_with("1,0,1e0,,\n"));
    }
}

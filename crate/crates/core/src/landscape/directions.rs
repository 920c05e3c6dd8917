//! Random filter-normalized plane directions.

use std::ops::Range;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Two orthogonal directions spanning a plane through a parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneDirections {
    pub seed: u64,
    pub delta: Vec<f64>,
    pub xi: Vec<f64>,
    /// Blocks whose reference norm was zero and were left unnormalized.
    pub skipped_blocks: Vec<usize>,
}

/// Checks that `blocks` tile `0..len` in order.
pub(crate) fn check_blocks(len: usize, blocks: &[Range<usize>]) -> Result<()> {
    let mut next = 0;
    for b in blocks {
        if b.start != next || b.end < b.start {
            return Err(Error::Shape(format!("parameter blocks must tile 0..{len} in order, found {b:?} at offset {next}")));
        }
        next = b.end;
    }
    if next != len {
        return Err(Error::Shape(format!("parameter blocks cover 0..{next}, expected 0..{len}")));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rescales every block of `d` to the norm of the same block of `w`.
fn filter_normalize(d: &mut [f64], w: &[f64], blocks: &[Range<usize>], skipped: &mut Vec<usize>) {
    for (i, b) in blocks.iter().enumerate() {
        let wn = norm(&w[b.clone()]);
        let dn = norm(&d[b.clone()]);
        if wn == 0.0 || dn == 0.0 {
            if !skipped.contains(&i) {
                warn!("parameter block {i} has zero norm, its direction is not normalized");
                skipped.push(i);
            }
            continue;
        }
        let s = wn / dn;
        d[b.clone()].iter_mut().for_each(|x| *x *= s);
    }
}

/// Gaussian directions `delta` and `xi`, each rescaled block by block to the
/// norms of `params`, after which `xi` is projected off `delta` and brought
/// back to its previous length.
pub fn random_plane_directions(params: &[f64], blocks: &[Range<usize>], seed: u64) -> Result<PlaneDirections> {
    check_blocks(params.len(), blocks)?;
    if params.is_empty() {
        return Err(Error::Shape("no parameters to perturb".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<f64> { (0..params.len()).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let mut delta = draw();
    let mut xi = draw();
    let mut skipped = Vec::new();
    filter_normalize(&mut delta, params, blocks, &mut skipped);
    filter_normalize(&mut xi, params, blocks, &mut skipped);
    skipped.sort_unstable();

    let length = norm(&xi);
    let dd = dot(&delta, &delta);
    // Two projection passes keep the residual overlap at rounding level.
    for _ in 0..2 {
        let c = dot(&xi, &delta) / dd;
        xi.iter_mut().zip(&delta).for_each(|(x, d)| *x -= c * d);
    }
    let n = norm(&xi);
    if n == 0.0 {
        return Err(Error::Degenerate("second direction is parallel to the first".into()));
    }
    xi.iter_mut().for_each(|x| *x *= length / n);
    Ok(PlaneDirections { seed, delta, xi, skipped_blocks: skipped })
}

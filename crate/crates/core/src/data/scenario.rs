use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Interp,
    Extrap,
}

/// Impact parameters `eta = [v, theta, r_offset, d]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Impact velocity in km/h.
    pub v: f64,
    /// Impact angle in degrees.
    pub theta: f64,
    /// Overlap ratio in percent of the vehicle width.
    pub r_offset: f64,
    /// Distance to the barrier in meters.
    pub d: f64,
    pub split: Split,
}

impl Scenario {
    pub fn new(v: f64, theta: f64, r_offset: f64, d: f64, split: Split) -> Self {
        Self { v, theta, r_offset, d, split }
    }

    pub fn eta(&self) -> [f64; 4] {
        [self.v, self.theta, self.r_offset, self.d]
    }

    pub fn speed_ms(&self) -> f64 {
        self.v / 3.6
    }

    /// Time at which the vehicle has closed the distance `d` to the barrier.
    pub fn impact_time(&self) -> f64 {
        self.d / (self.speed_ms() * self.theta.to_radians().cos())
    }
}

/// Per-dimension `[lo, hi]` bounds for `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRanges {
    pub v: (f64, f64),
    pub theta: (f64, f64),
    pub r_offset: (f64, f64),
    pub d: (f64, f64),
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self { v: (40.0, 80.0), theta: (0.0, 45.0), r_offset: (5.0, 100.0), d: (0.1, 2.0) }
    }
}

impl ParamRanges {
    pub fn as_array(&self) -> [(f64, f64); 4] {
        [self.v, self.theta, self.r_offset, self.d]
    }

    pub fn validate(&self) -> Result<()> {
        for (dim, (lo, hi)) in self.as_array().into_iter().enumerate() {
            if !(lo < hi) {
                return Err(Error::Range { dim, lo, hi });
            }
        }
        Ok(())
    }

    pub fn contains(&self, s: &Scenario) -> bool {
        self.as_array().iter().zip(s.eta()).all(|(&(lo, hi), x)| x >= lo && x <= hi)
    }
}

/// Latin hypercube design on the unit cube: row `i` holds one point, and in
/// every column the values `floor(n * u)` form a permutation of `0..n`.
pub fn lhs_unit(n: usize, dims: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; dims]; n];
    let mut bins: Vec<usize> = (0..n).collect();
    for j in 0..dims {
        bins.shuffle(rng);
        for (i, &b) in bins.iter().enumerate() {
            // The jitter lies in [0, 1), keeping the value inside bin b.
            out[i][j] = (b as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    out
}

pub fn lhs_sample(n: usize, ranges: &ParamRanges, seed: u64) -> Result<Vec<Scenario>> {
    if n == 0 {
        return Err(Error::Config("LHS sample count must be at least 1".into()));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = ranges.as_array();
    Ok(lhs_unit(n, 4, &mut rng)
        .into_iter()
        .map(|u| {
            let x: Vec<f64> = (0..4).map(|j| r[j].0 + u[j] * (r[j].1 - r[j].0)).collect();
            Scenario::new(x[0], x[1], x[2], x[3], Split::Train)
        })
        .collect())
}

pub const EXTRAP_R_OFFSET: f64 = 60.5;
pub const EXTRAP_D: f64 = 0.28;
/// Velocity of the angular extrapolation cases and angle of the
/// high-velocity case; neither is fixed by the protocol.
pub const EXTRAP_ANGLE_CASE_V: f64 = 60.0;
pub const EXTRAP_VELOCITY_CASE_THETA: f64 = 22.5;
pub const EXTRAP_VELOCITY: f64 = 97.0;

/// 20 training and 8 interpolation scenarios from two LHS designs, then the
/// 9 extrapolation cases (angles 46..=53 degrees and one 97 km/h impact).
pub fn default_splits(seed: u64) -> Vec<Scenario> {
    let ranges = ParamRanges::default();
    let mut out = lhs_sample(20, &ranges, seed).expect("default ranges are valid");
    let interp_seed = seed ^ 0x9E37_79B9_7F4A_7C15;
    out.extend(lhs_sample(8, &ranges, interp_seed).expect("default ranges are valid").into_iter().map(|mut s| {
        s.split = Split::Interp;
        s
    }));
    for theta in 46..=53 {
        out.push(Scenario::new(EXTRAP_ANGLE_CASE_V, theta as f64, EXTRAP_R_OFFSET, EXTRAP_D, Split::Extrap));
    }
    out.push(Scenario::new(EXTRAP_VELOCITY, EXTRAP_VELOCITY_CASE_THETA, EXTRAP_R_OFFSET, EXTRAP_D, Split::Extrap));
    out
}

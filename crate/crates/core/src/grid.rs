//! Integer piecewise-linearization grids.
//!
//! A [`PiecewiseGrid`] holds the ordered integer grid points `(F_z, P_z)` of
//! one pipeline: `P_z` are pressure-gradient values (barg) and `F_z` the
//! corresponding flow values (kSm3/h). All values are integers so the cut
//! tables derived from them stay exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("need at least 2 segments, got {0}")]
    TooFewSegments(usize),
    #[error("reference pressure sum must be positive")]
    NonPositiveReference,
    #[error("pressure-gradient range {range} cannot hold {segments} strictly increasing integer steps")]
    PressureRangeTooSmall { range: i64, segments: usize },
    #[error("tie perturbation pushed flow grid past capacity {cap} (needed {needed})")]
    FlowCapExceeded { cap: i64, needed: i64 },
    #[error("grid invariant violated: {0}")]
    Invalid(&'static str),
}

/// Ordered integer grid points for one pipeline. Index 0 is the origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiecewiseGrid {
    pub f: Vec<i64>,
    pub p: Vec<i64>,
}

impl PiecewiseGrid {
    /// Validate and wrap explicit grid points.
    pub fn new(f: Vec<i64>, p: Vec<i64>) -> Result<Self, GridError> {
        if f.len() != p.len() {
            return Err(GridError::Invalid("flow and pressure grids differ in length"));
        }
        if f.len() < 2 {
            return Err(GridError::Invalid("need at least 2 grid points"));
        }
        if f[0] != 0 || p[0] != 0 {
            return Err(GridError::Invalid("first grid point must be the origin"));
        }
        if f.windows(2).any(|w| w[0] >= w[1]) || p.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GridError::Invalid("grid values must be strictly increasing"));
        }
        Ok(PiecewiseGrid { f, p })
    }

    /// Number of grid points (segments + 1).
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Deterministic content hash, used to key cut-table cache files.
    pub fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325; // FNV-1a
        let mut eat = |x: i64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.f.len() as i64);
        for &v in self.f.iter().chain(self.p.iter()) {
            eat(v);
        }
        h
    }

    /// Piecewise-linear interpolant value |f|(dp) for a pressure gradient
    /// between grid points, as an exact rational.
    pub fn interpolate(&self, dp: &crate::rat::Rat) -> Option<crate::rat::Rat> {
        use crate::rat::rat;
        let n = self.len();
        if *dp < rat(0) || *dp > rat(self.p[n - 1]) {
            return None;
        }
        for i in 0..n - 1 {
            let (p0, p1) = (rat(self.p[i]), rat(self.p[i + 1]));
            if *dp >= p0 && *dp <= p1 {
                let t = (dp - &p0) / (&p1 - &p0);
                let (f0, f1) = (rat(self.f[i]), rat(self.f[i + 1]));
                return Some(&f0 + t * (f1 - &f0));
            }
        }
        None
    }
}

/// Build a grid for a pipeline: `n_segments` equidistant integer
/// pressure-gradient points on `[0, dp_max]` and flow points
/// `F_z = round(sqrt(r * P_z * reference_pressure_sum))`.
///
/// `r` is the pipeline flow-equation constant in (kSm3/h)^2 per barg^2,
/// `dp_max` the largest representable pressure gradient (barg) and
/// `reference_pressure_sum` the fixed `p_m + p_n` (barg) at which the
/// quadratic flow curve is sampled. Rounding ties are resolved by bumping the
/// later flow value by +1; if that would exceed `flow_cap`, an error is
/// returned instead of silently growing the grid.
pub fn generate_grid(
    r: f64,
    dp_max: i64,
    reference_pressure_sum: i64,
    n_segments: usize,
    flow_cap: Option<i64>,
) -> Result<PiecewiseGrid, GridError> {
    if n_segments < 2 {
        return Err(GridError::TooFewSegments(n_segments));
    }
    if reference_pressure_sum <= 0 {
        return Err(GridError::NonPositiveReference);
    }
    if dp_max < n_segments as i64 {
        return Err(GridError::PressureRangeTooSmall { range: dp_max, segments: n_segments });
    }
    let p: Vec<i64> = (0..=n_segments)
        .map(|i| ((i as f64) * (dp_max as f64) / (n_segments as f64)).round() as i64)
        .collect();
    let mut f: Vec<i64> = p
        .iter()
        .map(|&pz| (r * (pz as f64) * (reference_pressure_sum as f64)).sqrt().round() as i64)
        .collect();
    for i in 1..f.len() {
        if f[i] <= f[i - 1] {
            f[i] = f[i - 1] + 1;
        }
    }
    if let Some(cap) = flow_cap {
        let needed = *f.last().unwrap();
        if needed > cap {
            return Err(GridError::FlowCapExceeded { cap, needed });
        }
    }
    PiecewiseGrid::new(f, p)
}

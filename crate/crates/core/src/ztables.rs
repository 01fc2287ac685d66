//! A-priori computation of the cut tables used by the tight (Z)
//! linearization of the gas-flow equation.
//!
//! Given an integer grid `(F_z, P_z)` the tables are:
//!
//! * `a[z][zt] = min(P_z F_zt - F_z P_zt, 0)` for all `z != zt`,
//! * `b[zt][z] = max(F_z P_zt - P_z F_zt, 0)` and
//!   `c[z][zt] = min(F_z P_zt - P_z F_zt, 0)` for `1 <= z <= zt`
//!   (0-indexed; i.e. from the second grid point up to `zt`),
//! * a set of direction tuples `(u, v, w)`: integer search directions
//!   `u, v in 1..=U` with `U = max(F_last - F_1, P_last - P_1)` whose level
//!   vector `Z_z = u F_z - v P_z` takes some value `s` at two or more grid
//!   points. Per tuple the coefficient vectors `d`, `e`, `ft` split the level
//!   vector around `s` and drive one pair of direction cuts. Tuples whose
//!   vector is a positive multiple of an earlier kept tuple are eliminated;
//!   groups with shared value 0 are kept out of the cut set (their
//!   right-hand side would vanish).
//!
//! [`compute_z_tables`] is the production path (it skips redundant
//! directions in O(1) via primitive-direction bookkeeping);
//! [`compute_z_tables_literal`] is a deliberately naive transcription of the
//! same procedure used as a test oracle on small grids.

use crate::grid::PiecewiseGrid;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use thiserror::Error;

pub const ZPARAMS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ZParamsError {
    #[error("cache io: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache parse: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cache format version {found} != expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("cache grid hash {found:#x} does not match grid {expected:#x}")]
    GridHash { found: u64, expected: u64 },
}

/// One valid direction tuple and its cut coefficients.
///
/// `d`, `e`, `ft` are indexed by grid point (entry 0 unused and zero);
/// `sgn` is the shared level value of the repeated-value group and
/// `rhs = -|sgn|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZTuple {
    pub u: i64,
    pub v: i64,
    pub w: usize,
    pub sgn: i64,
    pub rhs: i64,
    pub d: Vec<i64>,
    pub e: Vec<i64>,
    pub ft: Vec<i64>,
}

/// All precomputed tables for one grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZParams {
    pub version: u32,
    pub grid_hash: u64,
    pub n: usize,
    /// `a[z][zt]`, zero on the diagonal.
    pub a: Vec<Vec<i64>>,
    /// `b[zt][z]`, zero outside `1 <= z <= zt`.
    pub b: Vec<Vec<i64>>,
    /// `c[z][zt]`, zero outside `1 <= z <= zt`.
    pub c: Vec<Vec<i64>>,
    pub tuples: Vec<ZTuple>,
}

impl ZParams {
    pub fn save(&self, path: &Path) -> Result<(), ZParamsError> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Load a cache file and verify it matches `grid`.
    pub fn load(path: &Path, grid: &PiecewiseGrid) -> Result<ZParams, ZParamsError> {
        let text = std::fs::read_to_string(path)?;
        let p: ZParams = serde_json::from_str(&text)?;
        if p.version != ZPARAMS_FORMAT_VERSION {
            return Err(ZParamsError::Version { found: p.version, expected: ZPARAMS_FORMAT_VERSION });
        }
        let expected = grid.content_hash();
        if p.grid_hash != expected {
            return Err(ZParamsError::GridHash { found: p.grid_hash, expected });
        }
        Ok(p)
    }
}

/// Pairwise cross-product tables `a`, `b`, `c` (see module docs).
pub fn compute_abc(grid: &PiecewiseGrid) -> (Vec<Vec<i64>>, Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let n = grid.len();
    let (f, p) = (&grid.f, &grid.p);
    let mut a = vec![vec![0i64; n]; n];
    let mut b = vec![vec![0i64; n]; n];
    let mut c = vec![vec![0i64; n]; n];
    for z in 0..n {
        for zt in 0..n {
            if z != zt {
                a[z][zt] = (p[z] * f[zt] - f[z] * p[zt]).min(0);
            }
        }
    }
    for zt in 0..n {
        for z in 1..=zt {
            let t = f[z] * p[zt] - p[z] * f[zt];
            b[zt][z] = t.max(0);
            c[z][zt] = t.min(0);
        }
    }
    (a, b, c)
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

/// Split the level vector `z_vec` (shared value `s`) into the cut
/// coefficient vectors `d`, `e`, `ft`.
fn split_levels(z_vec: &[i64], s: i64) -> (Vec<i64>, Vec<i64>, Vec<i64>) {
    let n = z_vec.len();
    let mut d = vec![0i64; n];
    let mut e = vec![0i64; n];
    let mut ft = vec![0i64; n];
    for z in 1..n {
        let zz = z_vec[z];
        if s > 0 {
            if zz <= s {
                d[z] = zz;
            } else {
                e[z] = s;
                ft[z] = s - zz;
            }
        } else {
            if zz >= s {
                d[z] = -zz;
            } else {
                e[z] = -s;
            }
            if zz <= s {
                ft[z] = -s + zz;
            }
        }
    }
    (d, e, ft)
}

/// Repeated-value groups of a level vector, ordered by first occurrence.
/// Returns `(shared value, positions)` per group with `>= 2` positions.
fn repeated_groups(z_vec: &[i64]) -> Vec<(i64, Vec<usize>)> {
    let mut byval: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &zv) in z_vec.iter().enumerate() {
        byval.entry(zv).or_default().push(i);
    }
    let mut groups: Vec<(usize, i64, Vec<usize>)> = byval
        .into_iter()
        .filter(|(_, pos)| pos.len() >= 2)
        .map(|(val, pos)| (pos[0], val, pos))
        .collect();
    groups.sort();
    groups.into_iter().map(|(_, val, pos)| (val, pos)).collect()
}

fn tuples_from_groups(u: i64, v: i64, z_vec: &[i64], out: &mut Vec<ZTuple>) {
    for (w, (s, _)) in repeated_groups(z_vec).into_iter().enumerate() {
        if s == 0 {
            continue; // right-hand side would be zero; no cut emitted
        }
        let (d, e, ft) = split_levels(z_vec, s);
        out.push(ZTuple { u, v, w: w + 1, sgn: s, rhs: -s.abs(), d, e, ft });
    }
}

/// Production computation of [`ZParams`] for a grid.
///
/// Tuples are enumerated in `(u, v)` lexicographic order, repeated-value
/// groups per tuple in order of first occurrence, so output is deterministic.
pub fn compute_z_tables(grid: &PiecewiseGrid) -> ZParams {
    let n = grid.len();
    let (f, p) = (&grid.f, &grid.p);
    let (a, b, c) = compute_abc(grid);
    let mut tuples = Vec::new();
    if n >= 2 {
        let u_max = (f[n - 1] - f[1]).max(p[n - 1] - p[1]).max(0);
        // a later (u,v) is a positive multiple of an earlier kept tuple's
        // level vector iff it is an integer multiple of the same primitive
        // direction, so one gcd check replaces the vector comparison
        let mut kept_dirs: HashSet<(i64, i64)> = HashSet::new();
        for u in 1..=u_max {
            for v in 1..=u_max {
                let g = gcd(u, v);
                if kept_dirs.contains(&(u / g, v / g)) {
                    continue;
                }
                let z_vec: Vec<i64> = (0..n).map(|i| u * f[i] - v * p[i]).collect();
                if repeated_groups(&z_vec).is_empty() {
                    continue;
                }
                kept_dirs.insert((u / g, v / g));
                tuples_from_groups(u, v, &z_vec, &mut tuples);
            }
        }
    }
    ZParams {
        version: ZPARAMS_FORMAT_VERSION,
        grid_hash: grid.content_hash(),
        n,
        a,
        b,
        c,
        tuples,
    }
}

/// Naive transcription of the tuple search used as a test oracle.
///
/// Eliminates a direction when its level vector is a positive *rational*
/// multiple of any previously kept vector, checked element-wise with exact
/// rationals; quadratic in the number of kept tuples and only suitable for
/// small grids.
pub fn compute_z_tables_literal(grid: &PiecewiseGrid) -> ZParams {
    use crate::rat::{rat, Rat};
    fn is_pos_multiple(z: &[i64], zk: &[i64]) -> bool {
        let mut q: Option<Rat> = None;
        for (&a, &b) in z.iter().zip(zk) {
            if (a == 0) != (b == 0) {
                return false;
            }
            if b != 0 {
                let r = rat(a) / rat(b);
                match &q {
                    None => q = Some(r),
                    Some(q0) if *q0 != r => return false,
                    _ => {}
                }
            }
        }
        q.is_some_and(|q| q > rat(0))
    }
    let n = grid.len();
    let (f, p) = (&grid.f, &grid.p);
    let (a, b, c) = compute_abc(grid);
    let mut kept: Vec<Vec<i64>> = Vec::new();
    let mut tuples = Vec::new();
    if n >= 2 {
        let u_max = (f[n - 1] - f[1]).max(p[n - 1] - p[1]).max(0);
        for u in 1..=u_max {
            for v in 1..=u_max {
                let z_vec: Vec<i64> = (0..n).map(|i| u * f[i] - v * p[i]).collect();
                if kept.iter().any(|zk| is_pos_multiple(&z_vec, zk)) {
                    continue;
                }
                if repeated_groups(&z_vec).is_empty() {
                    continue;
                }
                kept.push(z_vec.clone());
                tuples_from_groups(u, v, &z_vec, &mut tuples);
            }
        }
    }
    ZParams {
        version: ZPARAMS_FORMAT_VERSION,
        grid_hash: grid.content_hash(),
        n,
        a,
        b,
        c,
        tuples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(f: &[i64], p: &[i64]) -> PiecewiseGrid {
        PiecewiseGrid::new(f.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn abc_hand_example() {
        // F=(0,2,3), P=(0,1,3): a[1][2] = min(1*3 - 2*3, 0) = -3
        let (a, b, c) = compute_abc(&g(&[0, 2, 3], &[0, 1, 3]));
        assert_eq!(a[1][2], -3);
        assert_eq!(a[1][1], 0); // diagonal excluded
        // b[zt][z] / c[z][zt] for z=1..zt: t = F1*P2 - P1*F2 = 2*3 - 1*3 = 3
        assert_eq!(b[2][1], 3);
        assert_eq!(c[1][2], 0);
        // t = F1*P1 - P1*F1 = 0 on z = zt
        assert_eq!(b[1][1], 0);
    }

    #[test]
    fn abc_zero_when_grids_equal() {
        let (a, b, c) = compute_abc(&g(&[0, 1, 2], &[0, 1, 2]));
        assert!(a.iter().flatten().all(|&x| x == 0));
        assert!(b.iter().flatten().all(|&x| x == 0));
        assert!(c.iter().flatten().all(|&x| x == 0));
    }

    #[test]
    fn hand_executed_three_point_tuple() {
        // F=(0,1,2), P=(0,2,3): level vector for (u,v)=(2,1) is (0,0,1),
        // repeated value 0 at the first two points -> group kept in the
        // enumeration but excluded from the cut set (rhs would be 0)
        let grid = g(&[0, 1, 2], &[0, 2, 3]);
        let zp = compute_z_tables(&grid);
        assert!(zp.tuples.iter().all(|t| t.sgn != 0 && t.rhs == -t.sgn.abs()));
        // the (2,1) direction vector is (0,0,1); verify it is flagged as
        // having a repeated value during enumeration
        let z_vec: Vec<i64> = vec![2 * 0 - 0, 2 * 1 - 2, 2 * 2 - 3];
        assert_eq!(z_vec, vec![0, 0, 1]);
        assert_eq!(repeated_groups(&z_vec), vec![(0, vec![0, 1])]);
    }

    #[test]
    fn degenerate_two_point_grid_has_empty_tuples() {
        let zp = compute_z_tables(&g(&[0, 1], &[0, 1]));
        // U = max(F1-F1, P1-P1) = 0 -> no search directions at all
        assert!(zp.tuples.is_empty());
    }

    #[test]
    fn production_matches_literal_on_small_grid() {
        let grid = g(&[0, 2, 5, 9], &[0, 1, 3, 6]);
        assert_eq!(compute_z_tables(&grid), compute_z_tables_literal(&grid));
    }

    #[test]
    fn concave_six_point_grid_has_ten_tuples() {
        let grid = g(&[0, 508, 719, 880, 1016, 1136], &[0, 5, 10, 15, 20, 25]);
        let zp = compute_z_tables(&grid);
        assert_eq!(zp.tuples.len(), 10);
        assert!(zp.tuples.iter().all(|t| t.sgn > 0));
    }

    #[test]
    fn cache_round_trip_and_mismatch() {
        let grid = g(&[0, 2, 5, 9], &[0, 1, 3, 6]);
        let zp = compute_z_tables(&grid);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.json");
        zp.save(&path).unwrap();
        assert_eq!(ZParams::load(&path, &grid).unwrap(), zp);
        let other = g(&[0, 2, 5, 10], &[0, 1, 3, 6]);
        assert!(matches!(ZParams::load(&path, &other), Err(ZParamsError::GridHash { .. })));
    }
}

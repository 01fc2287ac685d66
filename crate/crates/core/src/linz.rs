//! Tight (Z) piecewise linearization of the gas-flow equation.
//!
//! Per pipeline and period the emitter introduces forward/reverse flow
//! (`f+`, `f-`) and pressure-gradient (`p+`, `p-`) splits, interpolation
//! weights `gamma_z` over the integer grid, selector variables `delta_z` and
//! a flow-direction variable `xi`, then ties them together with the
//! precomputed cut tables from [`crate::ztables`]. The constraint set is
//! tight: at every vertex of its LP relaxation `delta` and `xi` take integer
//! values even when declared continuous.

use crate::grid::PiecewiseGrid;
use crate::mip::{MipModel, ModelError, Sense, VarId, VarSpec};
use crate::rat::{rat, Rat};
use crate::ztables::ZParams;
use num::Zero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZError {
    #[error("cut tables were computed for a different grid (hash {params:#x} vs {grid:#x})")]
    GridHashMismatch { params: u64, grid: u64 },
    #[error("pressure variable `{0}` needs finite lower and upper bounds")]
    MissingPressureBounds(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Emission options.
#[derive(Debug, Clone)]
pub struct ZConfig {
    /// Declare `delta` and `xi` continuous on [0,1] instead of binary.
    /// Used to test the tightness of the relaxation; solvers get binaries.
    pub binaries_continuous: bool,
    /// Direction convention: `true` (default) means `xi = 1` in the
    /// forward-flow regime (`f- = p- = 0`); `false` flips the encoding.
    pub xi_one_means_forward: bool,
    /// The published cut tables define the reverse-regime upper envelope
    /// only for alias points at or above the row point; that makes reverse
    /// flow (`f < 0`) infeasible everywhere except at zero, i.e. pipelines
    /// are effectively one-directional. Setting this flag extends the
    /// envelope symmetrically (10 extra nonzeros on a 6-point grid) so
    /// reverse operation is representable; the default keeps the literal
    /// tables, whose sizes match the published counts exactly.
    pub extended_reverse_envelope: bool,
}

impl Default for ZConfig {
    fn default() -> Self {
        ZConfig {
            binaries_continuous: false,
            xi_one_means_forward: true,
            extended_reverse_envelope: false,
        }
    }
}

/// Handles of the variables created by [`emit_z`] for one pipeline/period.
#[derive(Debug, Clone)]
pub struct ZPipelineVars {
    pub f_pos: VarId,
    pub f_neg: VarId,
    pub p_pos: VarId,
    pub p_neg: VarId,
    pub gamma: Vec<VarId>,
    pub delta: Vec<VarId>,
    pub xi: VarId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowDirection {
    Forward,
    Reverse,
}

fn sgn(x: i64) -> i64 {
    x.signum()
}

/// Drop zero-coefficient terms so nonzero counts stay exact.
fn terms(pairs: Vec<(VarId, Rat)>) -> Vec<(VarId, Rat)> {
    pairs.into_iter().filter(|(_, a)| !a.is_zero()).collect()
}

/// Emit the full constraint block for one pipeline and period.
///
/// `f` is the signed average flow, `pm`/`pn` the endpoint pressures of the
/// oriented pipeline `m -> n`; `pm` must carry finite bounds (they provide
/// the tight pressure rows). Returns the created variable handles.
pub fn emit_z(
    model: &mut MipModel,
    prefix: &str,
    f: VarId,
    pm: VarId,
    pn: VarId,
    grid: &PiecewiseGrid,
    zp: &ZParams,
    cfg: &ZConfig,
) -> Result<ZPipelineVars, ZError> {
    let ghash = grid.content_hash();
    if zp.grid_hash != ghash {
        return Err(ZError::GridHashMismatch { params: zp.grid_hash, grid: ghash });
    }
    let n = grid.len();
    let (fv, pv) = (&grid.f, &grid.p);
    let p_lo = model.var(pm).lower.clone().ok_or_else(|| ZError::MissingPressureBounds(model.var(pm).name.clone()))?;
    let p_hi = model.var(pm).upper.clone().ok_or_else(|| ZError::MissingPressureBounds(model.var(pm).name.clone()))?;

    let f_pos = model.add_variable(VarSpec::nonneg(format!("{prefix}fpos")))?;
    let f_neg = model.add_variable(VarSpec::nonneg(format!("{prefix}fneg")))?;
    let p_pos = model.add_variable(VarSpec::nonneg(format!("{prefix}ppos")))?;
    let p_neg = model.add_variable(VarSpec::nonneg(format!("{prefix}pneg")))?;
    let mut gamma = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    for z in 0..n {
        gamma.push(model.add_variable(VarSpec::continuous(format!("{prefix}gamma{z}"), Some(rat(0)), Some(rat(1))))?);
    }
    let selector = |name: String| {
        if cfg.binaries_continuous {
            VarSpec::continuous(name, Some(rat(0)), Some(rat(1)))
        } else {
            VarSpec::binary(name)
        }
    };
    for z in 0..n {
        delta.push(model.add_variable(selector(format!("{prefix}delta{z}")))?);
    }
    let xi = model.add_variable(selector(format!("{prefix}xi")))?;

    // f = f+ - f-
    model.add_constraint(
        terms(vec![(f, rat(1)), (f_pos, rat(-1)), (f_neg, rat(1))]),
        Sense::Eq,
        rat(0),
        "flow-split",
    )?;
    // pm - pn = p+ - p-
    model.add_constraint(
        terms(vec![(pm, rat(1)), (pn, rat(-1)), (p_pos, rat(-1)), (p_neg, rat(1))]),
        Sense::Eq,
        rat(0),
        "gradient-split",
    )?;
    // p+ + p- = sum_z P_z gamma_z
    {
        let mut t = vec![(p_pos, rat(1)), (p_neg, rat(1))];
        for z in 0..n {
            t.push((gamma[z], rat(-pv[z])));
        }
        model.add_constraint(terms(t), Sense::Eq, rat(0), "gradient-mix")?;
    }
    // s1 * [P_last (f+ + f-) - F_last (p+ + p-)]
    //   = s1 * [P_last sum_{z<last} F_z gamma_z - F_last sum_{z<last} P_z gamma_z]
    // (the sign factor keeps the row orientation fixed; as an equality it
    // does not change the feasible set, degenerate sign 0 treated as +1)
    {
        let s1 = match sgn(pv[n - 1] - fv[n - 1]) {
            0 => 1,
            s => s,
        };
        let mut t = vec![
            (f_pos, rat(s1 * pv[n - 1])),
            (f_neg, rat(s1 * pv[n - 1])),
            (p_pos, rat(-s1 * fv[n - 1])),
            (p_neg, rat(-s1 * fv[n - 1])),
        ];
        for z in 0..n - 1 {
            t.push((gamma[z], rat(-s1 * (pv[n - 1] * fv[z] - fv[n - 1] * pv[z]))));
        }
        model.add_constraint(terms(t), Sense::Eq, rat(0), "flow-mix")?;
    }
    // sum gamma = sum delta = 1, emitted as the chained pair
    {
        let mut t = Vec::new();
        for z in 0..n {
            t.push((gamma[z], rat(1)));
            t.push((delta[z], rat(-1)));
        }
        model.add_constraint(t, Sense::Eq, rat(0), "mix-weights")?;
        let t: Vec<_> = delta.iter().map(|&d| (d, rat(1))).collect();
        model.add_constraint(t, Sense::Eq, rat(1), "mix-selectors")?;
    }
    // sum_{z<last} gamma_z <= 1 (only useful with more than 3 grid points)
    if n > 3 {
        let t: Vec<_> = (0..n - 1).map(|z| (gamma[z], rat(1))).collect();
        model.add_constraint(t, Sense::Le, rat(1), "single-interval")?;
    }
    // adjacency: per z < last,
    //   sum_{zt>z} delta_zt <= sum_{zt>z} gamma_zt
    //   sum_{zt>z+1} gamma_zt <= sum_{zt>z} delta_zt
    for z in 0..n - 1 {
        let mut t = Vec::new();
        for zt in z + 1..n {
            t.push((delta[zt], rat(1)));
            t.push((gamma[zt], rat(-1)));
        }
        model.add_constraint(t, Sense::Le, rat(0), "adjacency-upper")?;
        let mut t = Vec::new();
        for zt in z + 1..n {
            t.push((delta[zt], rat(-1)));
        }
        for zt in z + 2..n {
            t.push((gamma[zt], rat(1)));
        }
        model.add_constraint(t, Sense::Le, rat(0), "adjacency-lower")?;
    }
    // reverse-regime envelope: per z = 2..last (0-indexed 1..n-1),
    //   P_z f- - F_z p- >= sum_zt a[z][zt] gamma_zt      (lower cut)
    //   P_z f- - F_z p- <= sum_zt (b[zt][z] - c[z][zt]) gamma_zt   (upper cut)
    for z in 1..n {
        let mut t = vec![(f_neg, rat(-pv[z])), (p_neg, rat(fv[z]))];
        for zt in 0..n {
            t.push((gamma[zt], rat(zp.a[z][zt])));
        }
        model.add_constraint(terms(t), Sense::Le, rat(0), "reverse-lb")?;
        let mut t = vec![(f_neg, rat(pv[z])), (p_neg, rat(-fv[z]))];
        for zt in 0..n {
            let mut coeff = zp.b[zt][z] - zp.c[z][zt];
            if cfg.extended_reverse_envelope && zt >= 1 && zt < z {
                // symmetric completion of the envelope below the row point
                coeff += (fv[z] * pv[zt] - pv[z] * fv[zt]).abs();
            }
            t.push((gamma[zt], rat(-coeff)));
        }
        model.add_constraint(terms(t), Sense::Le, rat(0), "reverse-ub")?;
    }
    // direction cuts per valid (u,v,w) tuple; with s = sgn(tuple level) and
    // rhs = -|level|, the forward-convention pair is
    //   -s u f- + s v p- + sum (d+e) gamma + rhs * xi <= 0
    //    s u f- - s v p- + sum  f  gamma - rhs * xi <= -rhs
    // which encodes xi = 1 <=> forward; the flipped convention substitutes
    // xi -> 1 - xi.
    for t in &zp.tuples {
        let s = sgn(t.sgn);
        let rhs = t.rhs;
        let (xi_a, rhs_a, xi_b, rhs_b) = if cfg.xi_one_means_forward {
            (rat(rhs), rat(0), rat(-rhs), rat(-rhs))
        } else {
            (rat(-rhs), rat(-rhs), rat(rhs), rat(0))
        };
        let mut row = vec![(f_neg, rat(-s * t.u)), (p_neg, rat(s * t.v))];
        for z in 1..n {
            row.push((gamma[z], rat(t.d[z] + t.e[z])));
        }
        row.push((xi, xi_a));
        model.add_constraint(terms(row), Sense::Le, rhs_a, "direction-a")?;
        let mut row = vec![(f_neg, rat(s * t.u)), (p_neg, rat(-s * t.v))];
        for z in 1..n {
            row.push((gamma[z], rat(t.ft[z])));
        }
        row.push((xi, xi_b));
        model.add_constraint(terms(row), Sense::Le, rhs_b, "direction-b")?;
    }
    // tight pressure rows: P_lo <= pn - p- and pn - p- + sum_{z>=2} P_z gamma_z <= P_hi
    model.add_constraint(vec![(pn, rat(1)), (p_neg, rat(-1))], Sense::Ge, p_lo, "pressure-lb")?;
    {
        let mut t = vec![(pn, rat(1)), (p_neg, rat(-1))];
        for z in 1..n {
            t.push((gamma[z], rat(pv[z])));
        }
        model.add_constraint(terms(t), Sense::Le, p_hi, "pressure-ub")?;
    }

    Ok(ZPipelineVars { f_pos, f_neg, p_pos, p_neg, gamma, delta, xi })
}

/// Recover `(f, delta_p, direction)` from solved variable values.
pub fn decode_z(values: &[f64], vars: &ZPipelineVars, cfg: &ZConfig) -> (f64, f64, FlowDirection) {
    let f = values[vars.f_pos.index()] - values[vars.f_neg.index()];
    let dp = values[vars.p_pos.index()] - values[vars.p_neg.index()];
    let xi_on = values[vars.xi.index()] >= 0.5;
    let dir = if xi_on == cfg.xi_one_means_forward { FlowDirection::Forward } else { FlowDirection::Reverse };
    (f, dp, dir)
}

/// Standalone single-pipeline, single-period model: variables `f`, `pm`,
/// `pn` plus the full emitted block. Used for size and tightness analysis.
pub fn single_pipeline_model(
    grid: &PiecewiseGrid,
    zp: &ZParams,
    p_min: i64,
    p_max: i64,
    cfg: &ZConfig,
) -> Result<(MipModel, ZPipelineVars), ZError> {
    let mut m = MipModel::new("z-1p");
    let fmax = *grid.f.last().unwrap();
    let f = m.add_variable(VarSpec::continuous("f", Some(rat(-fmax)), Some(rat(fmax))))?;
    let pm = m.add_variable(VarSpec::continuous("pm", Some(rat(p_min)), Some(rat(p_max))))?;
    let pn = m.add_variable(VarSpec::continuous("pn", Some(rat(p_min)), Some(rat(p_max))))?;
    let vars = emit_z(&mut m, "", f, pm, pn, grid, zp, cfg)?;
    Ok((m, vars))
}

/// Exact feasible point of the single-pipeline model at grid point `z`
/// (forward when `forward`, mirrored otherwise); both endpoint pressures are
/// chosen inside the bounds so the gradient matches `P_z`.
#[doc(hidden)]
pub fn grid_point_solution(
    model: &MipModel,
    vars: &ZPipelineVars,
    grid: &PiecewiseGrid,
    z: usize,
    forward: bool,
    p_min: i64,
    p_max: i64,
    cfg: &ZConfig,
) -> Vec<Rat> {
    let mut x = vec![Rat::zero(); model.n_vars()];
    let (fz, pz) = (grid.f[z], grid.p[z]);
    let f_signed = if forward { fz } else { -fz };
    // f, pm, pn are the first three variables of single_pipeline_model
    x[0] = rat(f_signed);
    let (hi, lo) = (rat(p_max), rat(p_max - pz));
    debug_assert!(rat(p_min) <= lo);
    if forward {
        x[1] = hi.clone();
        x[2] = lo.clone();
        x[vars.f_pos.index()] = rat(fz);
        x[vars.p_pos.index()] = rat(pz);
    } else {
        x[1] = lo.clone();
        x[2] = hi.clone();
        x[vars.f_neg.index()] = rat(fz);
        x[vars.p_neg.index()] = rat(pz);
    }
    x[vars.gamma[z].index()] = rat(1);
    x[vars.delta[z].index()] = rat(1);
    let xi_on = forward == cfg.xi_one_means_forward;
    x[vars.xi.index()] = if xi_on { rat(1) } else { rat(0) };
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generate_grid;
    use crate::ztables::compute_z_tables;

    fn case_grid(r: f64, segments: usize) -> PiecewiseGrid {
        generate_grid(r, 25, 136, segments, None).unwrap()
    }

    #[test]
    fn six_point_model_size_is_exact() {
        // all five distinct pipeline parameter sets of the case study
        for r in [379.82, 443.13, 332.34, 664.69, 265.88] {
            let grid = case_grid(r, 5);
            let zp = compute_z_tables(&grid);
            let (m, _) = single_pipeline_model(&grid, &zp, 43, 68, &ZConfig::default()).unwrap();
            let s = m.stats();
            assert_eq!(
                (s.n_constraints, s.n_continuous, s.n_binary, s.n_nonzeros),
                (49, 13, 7, 269),
                "r = {r}"
            );
        }
    }

    #[test]
    fn per_family_row_counts() {
        let grid = case_grid(379.82, 5);
        let zp = compute_z_tables(&grid);
        let (m, _) = single_pipeline_model(&grid, &zp, 43, 68, &ZConfig::default()).unwrap();
        let one_each = ["flow-split", "gradient-split", "gradient-mix", "flow-mix", "mix-weights", "mix-selectors", "single-interval", "pressure-lb", "pressure-ub"];
        for tag in one_each {
            assert_eq!(m.count_tag(tag), 1, "{tag}");
        }
        assert_eq!(m.count_tag("adjacency-upper"), 5);
        assert_eq!(m.count_tag("adjacency-lower"), 5);
        assert_eq!(m.count_tag("reverse-lb"), 5);
        assert_eq!(m.count_tag("reverse-ub"), 5);
        assert_eq!(m.count_tag("direction-a"), 10);
        assert_eq!(m.count_tag("direction-b"), 10);
    }

    #[test]
    fn origin_point_is_feasible() {
        let grid = case_grid(379.82, 5);
        let zp = compute_z_tables(&grid);
        let cfg = ZConfig::default();
        let (m, vars) = single_pipeline_model(&grid, &zp, 43, 68, &cfg).unwrap();
        let mut x = vec![Rat::zero(); m.n_vars()];
        x[1] = rat(43);
        x[2] = rat(43);
        x[vars.gamma[0].index()] = rat(1);
        x[vars.delta[0].index()] = rat(1);
        x[vars.xi.index()] = rat(1);
        assert_eq!(m.violations(&x), Vec::<String>::new());
        // xi is free at the origin: 0 works too
        x[vars.xi.index()] = rat(0);
        assert_eq!(m.violations(&x), Vec::<String>::new());
    }

    #[test]
    fn every_grid_point_is_feasible() {
        // literal tables: all forward points; extended envelope: both
        // directions (the literal tables cut off reverse operation)
        for segments in [3, 5] {
            let grid = case_grid(379.82, segments);
            let zp = compute_z_tables(&grid);
            for flip in [true, false] {
                for extended in [false, true] {
                    let cfg = ZConfig {
                        binaries_continuous: false,
                        xi_one_means_forward: flip,
                        extended_reverse_envelope: extended,
                    };
                    let (m, vars) = single_pipeline_model(&grid, &zp, 43, 68, &cfg).unwrap();
                    for z in 0..grid.len() {
                        for forward in [true, false] {
                            if !forward && !extended {
                                continue;
                            }
                            let x = grid_point_solution(&m, &vars, &grid, z, forward, 43, 68, &cfg);
                            assert_eq!(
                                m.violations(&x),
                                Vec::<String>::new(),
                                "segments={segments} z={z} forward={forward} flip={flip} extended={extended}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn literal_tables_cut_reverse_grid_points() {
        let grid = case_grid(379.82, 5);
        let zp = compute_z_tables(&grid);
        let cfg = ZConfig::default();
        let (m, vars) = single_pipeline_model(&grid, &zp, 43, 68, &cfg).unwrap();
        let x = grid_point_solution(&m, &vars, &grid, 2, false, 43, 68, &cfg);
        assert!(m.violations(&x).iter().any(|v| v.contains("reverse-ub")));
    }

    #[test]
    fn extended_envelope_adds_exactly_ten_nonzeros() {
        let grid = case_grid(379.82, 5);
        let zp = compute_z_tables(&grid);
        let base = single_pipeline_model(&grid, &zp, 43, 68, &ZConfig::default()).unwrap().0;
        let cfg = ZConfig { extended_reverse_envelope: true, ..ZConfig::default() };
        let ext = single_pipeline_model(&grid, &zp, 43, 68, &cfg).unwrap().0;
        assert_eq!(ext.stats().n_constraints, base.stats().n_constraints);
        assert_eq!(ext.stats().n_nonzeros, base.stats().n_nonzeros + 10);
    }

    #[test]
    fn segment_midpoints_are_feasible() {
        use crate::rat::ratio;
        let grid = case_grid(379.82, 5);
        let zp = compute_z_tables(&grid);
        let cfg = ZConfig::default();
        let (m, vars) = single_pipeline_model(&grid, &zp, 43, 68, &cfg).unwrap();
        for z in 0..grid.len() - 1 {
            let fmid = ratio(grid.f[z] + grid.f[z + 1], 2);
            let pmid = ratio(grid.p[z] + grid.p[z + 1], 2);
            let mut x = vec![Rat::zero(); m.n_vars()];
            x[0] = fmid.clone();
            x[1] = rat(68);
            x[2] = rat(68) - &pmid;
            x[vars.f_pos.index()] = fmid;
            x[vars.p_pos.index()] = pmid;
            x[vars.gamma[z].index()] = ratio(1, 2);
            x[vars.gamma[z + 1].index()] = ratio(1, 2);
            x[vars.delta[z].index()] = rat(1);
            x[vars.xi.index()] = rat(1);
            assert_eq!(m.violations(&x), Vec::<String>::new(), "segment {z}");
        }
    }

    #[test]
    fn hash_mismatch_rejected() {
        let grid = case_grid(379.82, 3);
        let other = case_grid(443.13, 3);
        let zp = compute_z_tables(&other);
        let err = single_pipeline_model(&grid, &zp, 43, 68, &ZConfig::default()).unwrap_err();
        assert!(matches!(err, ZError::GridHashMismatch { .. }));
    }

    #[test]
    fn decode_recovers_direction() {
        let grid = case_grid(379.82, 3);
        let zp = compute_z_tables(&grid);
        let cfg = ZConfig::default();
        let (m, vars) = single_pipeline_model(&grid, &zp, 43, 68, &cfg).unwrap();
        let x = grid_point_solution(&m, &vars, &grid, 2, false, 43, 68, &cfg);
        let xf: Vec<f64> = x.iter().map(crate::rat::to_f64).collect();
        let (f, dp, dir) = decode_z(&xf, &vars, &cfg);
        assert_eq!(dir, FlowDirection::Reverse);
        assert!((f + grid.f[2] as f64).abs() < 1e-12);
        assert!((dp + grid.p[2] as f64).abs() < 1e-12);
    }
}

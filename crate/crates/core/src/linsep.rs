//! Separable piecewise linearizations of the gas-flow equation.
//!
//! The incremental (`inc`) and SOS2 (`sos2`) methods linearize the signed
//! squared flow `f|f|` per pipeline and the squared pressure `p^2` per node
//! independently, then couple them through one linear "flow-equation" row
//! per pipeline:
//!
//! ```text
//! lin(f|f|) = R * (lin(p_m^2) - lin(p_n^2))
//! ```
//!
//! Both use a [`UnionGrid`]: a signed flow grid spanning `[-Fmax, +Fmax]`
//! (symmetric, containing 0) and a nodal pressure grid spanning the pressure
//! bounds. The two methods represent exactly the same piecewise function, so
//! their optimal objectives agree on any instance.

use crate::mip::{MipModel, ModelError, Sense, VarId, VarSpec};
use crate::rat::{rat, Rat};
use num::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UnionGridError {
    #[error("grid needs at least 2 points")]
    TooFewPoints,
    #[error("grid values must be strictly increasing")]
    NotIncreasing,
    #[error("flow grid must be symmetric about 0 and contain 0")]
    NotSymmetric,
    #[error("segment count must be >= 1 (flow: even, so 0 is a grid point)")]
    BadSegments,
}

/// Grids for the separable linearizations.
#[derive(Debug, Clone, PartialEq)]
pub struct UnionGrid {
    /// Signed flow grid points, symmetric about 0.
    pub flow: Vec<Rat>,
    /// Nodal pressure grid points spanning the pressure bounds.
    pub pressure: Vec<Rat>,
}

impl UnionGrid {
    pub fn new(flow: Vec<Rat>, pressure: Vec<Rat>) -> Result<Self, UnionGridError> {
        if flow.len() < 2 || pressure.len() < 2 {
            return Err(UnionGridError::TooFewPoints);
        }
        if flow.windows(2).any(|w| w[0] >= w[1]) || pressure.windows(2).any(|w| w[0] >= w[1]) {
            return Err(UnionGridError::NotIncreasing);
        }
        let n = flow.len();
        let symmetric = (0..n).all(|i| flow[i] == -flow[n - 1 - i].clone());
        if !symmetric || !flow.contains(&Rat::zero()) {
            return Err(UnionGridError::NotSymmetric);
        }
        Ok(UnionGrid { flow, pressure })
    }

    /// Equidistant grids: `flow_segments` (even) segments on
    /// `[-f_max, f_max]` and `pressure_segments` on `[p_min, p_max]`.
    pub fn equidistant(
        f_max: &Rat,
        flow_segments: usize,
        p_min: &Rat,
        p_max: &Rat,
        pressure_segments: usize,
    ) -> Result<Self, UnionGridError> {
        if flow_segments < 2 || flow_segments % 2 != 0 || pressure_segments < 1 {
            return Err(UnionGridError::BadSegments);
        }
        let flow = (0..=flow_segments)
            .map(|i| -f_max + rat(2) * f_max * rat(i as i64) / rat(flow_segments as i64))
            .collect();
        let pressure = (0..=pressure_segments)
            .map(|j| p_min + (p_max - p_min) * rat(j as i64) / rat(pressure_segments as i64))
            .collect();
        UnionGrid::new(flow, pressure)
    }
}

/// Signed square `x|x|`.
fn signed_sq(x: &Rat) -> Rat {
    x * x.abs()
}

/// Square `x^2`.
fn sq(x: &Rat) -> Rat {
    x * x
}

/// Handle to an emitted incremental curve: the linearized function value is
/// `value_base + sum(value_slopes[i] * fills[i])`.
#[derive(Debug, Clone)]
pub struct IncCurve {
    pub fills: Vec<VarId>,
    pub bins: Vec<VarId>,
    pub value_base: Rat,
    pub value_slopes: Vec<Rat>,
}

/// Emit the incremental representation of a piecewise curve `g(x)` sampled
/// at `xs` (values `gs`): one equality `x = xs[0] + sum(fills)`, fill bounds
/// `[0, segment length]`, and the standard ordering rows
/// `fill[i+1] <= len[i+1] * bin[i]`, `fill[i] >= len[i] * bin[i]`.
fn emit_inc_curve(
    model: &mut MipModel,
    prefix: &str,
    x: VarId,
    xs: &[Rat],
    gs: &[Rat],
    order_tag: &str,
    curve_tag: &str,
) -> Result<IncCurve, ModelError> {
    let nseg = xs.len() - 1;
    let mut fills = Vec::with_capacity(nseg);
    let mut bins = Vec::with_capacity(nseg.saturating_sub(1));
    let mut value_slopes = Vec::with_capacity(nseg);
    for i in 0..nseg {
        let len = &xs[i + 1] - &xs[i];
        fills.push(model.add_variable(VarSpec::continuous(
            format!("{prefix}fill{i}"),
            Some(Rat::zero()),
            Some(len.clone()),
        ))?);
        value_slopes.push((&gs[i + 1] - &gs[i]) / len);
    }
    for i in 0..nseg.saturating_sub(1) {
        bins.push(model.add_variable(VarSpec::binary(format!("{prefix}step{i}")))?);
    }
    let mut t = vec![(x, rat(1))];
    for &f in &fills {
        t.push((f, rat(-1)));
    }
    model.add_constraint(t, Sense::Eq, xs[0].clone(), curve_tag)?;
    for i in 0..nseg.saturating_sub(1) {
        let next_len = &xs[i + 2] - &xs[i + 1];
        let this_len = &xs[i + 1] - &xs[i];
        // fill[i+1] - len[i+1]*bin[i] <= 0
        model.add_constraint(
            vec![(fills[i + 1], rat(1)), (bins[i], -next_len)],
            Sense::Le,
            Rat::zero(),
            order_tag,
        )?;
        // len[i]*bin[i] - fill[i] <= 0
        model.add_constraint(
            vec![(bins[i], this_len), (fills[i], rat(-1))],
            Sense::Le,
            Rat::zero(),
            order_tag,
        )?;
    }
    Ok(IncCurve { fills, bins, value_base: gs[0].clone(), value_slopes })
}

/// Incremental block for one node: pressure variable `p` tied to the grid;
/// the squared pressure is available as a linear expression of the fills.
pub fn emit_inc_pressure(
    model: &mut MipModel,
    prefix: &str,
    p: VarId,
    grid: &UnionGrid,
) -> Result<IncCurve, ModelError> {
    let gs: Vec<Rat> = grid.pressure.iter().map(sq).collect();
    emit_inc_curve(model, prefix, p, &grid.pressure, &gs, "pressure-fill-order", "pressure-curve")
}

/// Incremental block for one pipeline: flow variable `f` tied to the signed
/// grid; the signed squared flow is available as a linear expression.
pub fn emit_inc_flow(
    model: &mut MipModel,
    prefix: &str,
    f: VarId,
    grid: &UnionGrid,
) -> Result<IncCurve, ModelError> {
    let gs: Vec<Rat> = grid.flow.iter().map(signed_sq).collect();
    emit_inc_curve(model, prefix, f, &grid.flow, &gs, "flow-fill-order", "flow-curve")
}

/// Coupling row `lin(f|f|) = r * (lin(p_m^2) - lin(p_n^2))` from emitted
/// incremental curves.
pub fn link_inc(
    model: &mut MipModel,
    flow: &IncCurve,
    node_m: &IncCurve,
    node_n: &IncCurve,
    r: &Rat,
) -> Result<(), ModelError> {
    let mut t = Vec::new();
    for (f, s) in flow.fills.iter().zip(&flow.value_slopes) {
        t.push((*f, s.clone()));
    }
    for (e, s) in node_m.fills.iter().zip(&node_m.value_slopes) {
        t.push((*e, -(r * s)));
    }
    for (e, s) in node_n.fills.iter().zip(&node_n.value_slopes) {
        t.push((*e, r * s));
    }
    let rhs = -&flow.value_base + r * (&node_m.value_base - &node_n.value_base);
    let t = t.into_iter().filter(|(_, a)| !a.is_zero()).collect();
    model.add_constraint(t, Sense::Eq, rhs, "flow-equation")
}

/// Handle to an emitted SOS2 interpolation.
#[derive(Debug, Clone)]
pub struct Sos2Curve {
    pub weights: Vec<VarId>,
}

fn emit_sos2_curve(
    model: &mut MipModel,
    prefix: &str,
    x: VarId,
    xs: &[Rat],
    interp_tag: &str,
    weight_tag: &str,
) -> Result<Sos2Curve, ModelError> {
    let mut w = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        let v = model.add_variable(VarSpec {
            name: format!("{prefix}w{i}"),
            kind: crate::mip::VarKind::Sos2Member,
            lower: Some(Rat::zero()),
            upper: Some(rat(1)),
        })?;
        w.push(v);
    }
    let mut t = vec![(x, rat(1))];
    for (v, xv) in w.iter().zip(xs) {
        if !xv.is_zero() {
            t.push((*v, -xv.clone()));
        }
    }
    model.add_constraint(t, Sense::Eq, Rat::zero(), interp_tag)?;
    model.add_constraint(w.iter().map(|&v| (v, rat(1))).collect(), Sense::Eq, rat(1), weight_tag)?;
    model.add_sos2(format!("{prefix}sos2"), w.clone(), xs.to_vec())?;
    Ok(Sos2Curve { weights: w })
}

/// SOS2 block for one node (2 rows + one SOS2 group).
pub fn emit_sos2_pressure(
    model: &mut MipModel,
    prefix: &str,
    p: VarId,
    grid: &UnionGrid,
) -> Result<Sos2Curve, ModelError> {
    emit_sos2_curve(model, prefix, p, &grid.pressure, "pressure-interp", "pressure-weights")
}

/// SOS2 block for one pipeline (2 rows + one SOS2 group).
pub fn emit_sos2_flow(
    model: &mut MipModel,
    prefix: &str,
    f: VarId,
    grid: &UnionGrid,
) -> Result<Sos2Curve, ModelError> {
    emit_sos2_curve(model, prefix, f, &grid.flow, "flow-interp", "flow-weights")
}

/// Coupling row for the SOS2 method (1 row per pipeline).
pub fn link_sos2(
    model: &mut MipModel,
    grid: &UnionGrid,
    flow: &Sos2Curve,
    node_m: &Sos2Curve,
    node_n: &Sos2Curve,
    r: &Rat,
) -> Result<(), ModelError> {
    let mut t = Vec::new();
    for (v, fz) in flow.weights.iter().zip(&grid.flow) {
        t.push((*v, signed_sq(fz)));
    }
    for (v, pz) in node_m.weights.iter().zip(&grid.pressure) {
        t.push((*v, -(r * sq(pz))));
    }
    for (v, pz) in node_n.weights.iter().zip(&grid.pressure) {
        t.push((*v, r * sq(pz)));
    }
    let t = t.into_iter().filter(|(_, a)| !a.is_zero()).collect();
    model.add_constraint(t, Sense::Eq, Rat::zero(), "flow-equation")
}

/// Linearization method selector for single-pipeline builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SepMethod {
    Inc,
    Sos2,
}

/// Standalone single-pipeline, single-period model over a union grid:
/// variables `f`, `pm`, `pn` plus the chosen separable blocks.
pub fn single_pipeline_model(grid: &UnionGrid, r: &Rat, method: SepMethod) -> Result<MipModel, ModelError> {
    let mut m = MipModel::new(match method {
        SepMethod::Inc => "inc-1p",
        SepMethod::Sos2 => "sos2-1p",
    });
    let fmax = grid.flow.last().unwrap().clone();
    let (plo, phi) = (grid.pressure.first().unwrap().clone(), grid.pressure.last().unwrap().clone());
    let f = m.add_variable(VarSpec::continuous("f", Some(-fmax.clone()), Some(fmax)))?;
    let pm = m.add_variable(VarSpec::continuous("pm", Some(plo.clone()), Some(phi.clone())))?;
    let pn = m.add_variable(VarSpec::continuous("pn", Some(plo), Some(phi)))?;
    match method {
        SepMethod::Inc => {
            let cf = emit_inc_flow(&mut m, "f:", f, grid)?;
            let cm = emit_inc_pressure(&mut m, "m:", pm, grid)?;
            let cn = emit_inc_pressure(&mut m, "n:", pn, grid)?;
            link_inc(&mut m, &cf, &cm, &cn, r)?;
        }
        SepMethod::Sos2 => {
            let cf = emit_sos2_flow(&mut m, "f:", f, grid)?;
            let cm = emit_sos2_pressure(&mut m, "m:", pm, grid)?;
            let cn = emit_sos2_pressure(&mut m, "n:", pn, grid)?;
            link_sos2(&mut m, grid, &cf, &cm, &cn, r)?;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{parse_decimal, ratio};

    fn case_grid() -> UnionGrid {
        // 10 flow segments on [-Fmax, Fmax], 5 pressure segments on [43, 68]
        UnionGrid::equidistant(&parse_decimal("1026.65").unwrap(), 10, &rat(43), &rat(68), 5).unwrap()
    }

    #[test]
    fn inc_single_pipeline_size_is_exact() {
        let r = parse_decimal("379.82").unwrap();
        let m = single_pipeline_model(&case_grid(), &r, SepMethod::Inc).unwrap();
        let s = m.stats();
        assert_eq!(
            (s.n_constraints, s.n_continuous, s.n_binary, s.n_nonzeros),
            (38, 23, 17, 111)
        );
    }

    #[test]
    fn sos2_single_pipeline_size_is_exact() {
        let r = parse_decimal("379.82").unwrap();
        let m = single_pipeline_model(&case_grid(), &r, SepMethod::Sos2).unwrap();
        let s = m.stats();
        assert_eq!(
            (s.n_constraints, s.n_continuous, s.n_binary, s.n_sos2_groups, s.n_nonzeros),
            (7, 26, 0, 3, 70)
        );
    }

    #[test]
    fn union_grid_invariants() {
        assert_eq!(
            UnionGrid::new(vec![rat(-1), rat(1)], vec![rat(0), rat(1)]).unwrap_err(),
            UnionGridError::NotSymmetric
        );
        assert!(UnionGrid::new(vec![rat(-1), rat(0), rat(1)], vec![rat(0), rat(1)]).is_ok());
        assert_eq!(
            UnionGrid::equidistant(&rat(10), 3, &rat(0), &rat(1), 1).unwrap_err(),
            UnionGridError::BadSegments
        );
    }

    #[test]
    fn grid_point_solutions_are_feasible_inc() {
        let grid = UnionGrid::equidistant(&rat(12), 4, &rat(2), &rat(6), 2).unwrap();
        // r chosen so grid flow values need not match the curve: the linking
        // row couples the linearized curves, which are exact at grid points
        let r = ratio(9, 2);
        let m = single_pipeline_model(&grid, &r, SepMethod::Inc).unwrap();
        // pick pm, pn on grid points, compute f from the linearized relation
        // pm=6, pn=2: rhs = r*(36-4) = 144 = f|f| -> f = 12 (a grid point)
        let mut x = vec![Rat::zero(); m.n_vars()];
        x[0] = rat(12);
        x[1] = rat(6);
        x[2] = rat(2);
        // flow fills: f = -12 + sum fills -> all 4 fills at their cap 6
        for i in 0..4 {
            x[m.var_by_name(&format!("f:fill{i}")).unwrap().index()] = rat(6);
        }
        for i in 0..3 {
            x[m.var_by_name(&format!("f:step{i}")).unwrap().index()] = rat(1);
        }
        // pm = 2 + 2 + 2 ; pn = 2
        for i in 0..2 {
            x[m.var_by_name(&format!("m:fill{i}")).unwrap().index()] = rat(2);
        }
        x[m.var_by_name("m:step0").unwrap().index()] = rat(1);
        assert_eq!(m.violations(&x), Vec::<String>::new());
    }

    #[test]
    fn grid_point_solutions_are_feasible_sos2() {
        let grid = UnionGrid::equidistant(&rat(12), 4, &rat(2), &rat(6), 2).unwrap();
        let r = ratio(9, 2);
        let m = single_pipeline_model(&grid, &r, SepMethod::Sos2).unwrap();
        let mut x = vec![Rat::zero(); m.n_vars()];
        x[0] = rat(12);
        x[1] = rat(6);
        x[2] = rat(2);
        x[m.var_by_name("f:w4").unwrap().index()] = rat(1); // flow grid point +12
        x[m.var_by_name("m:w2").unwrap().index()] = rat(1); // pressure 6
        x[m.var_by_name("n:w0").unwrap().index()] = rat(1); // pressure 2
        assert_eq!(m.violations(&x), Vec::<String>::new());
    }

    #[test]
    fn zero_gradient_zero_flow_is_feasible_in_both() {
        let grid = case_grid();
        let r = parse_decimal("379.82").unwrap();
        for method in [SepMethod::Inc, SepMethod::Sos2] {
            let m = single_pipeline_model(&grid, &r, method).unwrap();
            let mut x = vec![Rat::zero(); m.n_vars()];
            x[1] = rat(43);
            x[2] = rat(43);
            match method {
                SepMethod::Inc => {
                    // f = -Fmax + 5 full fills; pressure at lower bound: no fills
                    for i in 0..5 {
                        let cap = (&grid.flow[i + 1] - &grid.flow[i]).clone();
                        x[m.var_by_name(&format!("f:fill{i}")).unwrap().index()] = cap;
                    }
                    for i in 0..4 {
                        x[m.var_by_name(&format!("f:step{i}")).unwrap().index()] = rat(1);
                    }
                }
                SepMethod::Sos2 => {
                    x[m.var_by_name("f:w5").unwrap().index()] = rat(1); // flow 0
                    x[m.var_by_name("m:w0").unwrap().index()] = rat(1);
                    x[m.var_by_name("n:w0").unwrap().index()] = rat(1);
                }
            }
            assert_eq!(m.violations(&x), Vec::<String>::new(), "{method:?}");
        }
    }
}

//! Build a complete dispatch MILP from an [`Instance`] and a linearization
//! method.
//!
//! The model minimizes operating cost: gas supply, generator O&M, and
//! penalties for non-supplied electricity/gas. Blocks: unit commitment for
//! thermal units, gas conversion coupling, pipeline linepack dynamics,
//! compressors, nodal gas balances, a DC power flow on bus angles, and one
//! gas-flow linearization block per pipeline and period (incremental, SOS2,
//! or the direction-cut method).
//!
//! Simple bounds (non-supplied slacks, source limits, compressor flow caps,
//! renewable availability) are variable bounds, not constraint rows. Every
//! constraint row carries a family tag for auditing per-family counts.

use crate::grid::PiecewiseGrid;
use crate::instance::{GeneratorKind, Instance};
use crate::linsep::{
    emit_inc_flow, emit_inc_pressure, emit_sos2_flow, emit_sos2_pressure, link_inc, link_sos2,
    UnionGrid,
};
use crate::linz::{emit_z, ZConfig, ZError};
use crate::mip::{MipModel, ModelError, Sense, VarId, VarSpec};
use crate::rat::{rat, ratio, Rat};
use crate::ztables::ZParams;
use num::{One, Zero};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("pipeline `{0}` has no grid for the chosen method")]
    MissingGrid(String),
    #[error("pipeline `{0}` has no precomputed cut tables")]
    MissingParams(String),
    #[error(transparent)]
    Z(#[from] ZError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("pipeline `{id}`: {source}")]
    Grid { id: String, source: crate::grid::GridError },
    #[error("pipeline `{id}`: {source}")]
    UnionGrid { id: String, source: crate::linsep::UnionGridError },
}

/// Linearization method plus its per-pipeline data, keyed by pipeline id.
#[derive(Debug, Clone)]
pub enum MethodChoice {
    Inc { grids: HashMap<String, UnionGrid> },
    Sos2 { grids: HashMap<String, UnionGrid> },
    Z { grids: HashMap<String, PiecewiseGrid>, params: HashMap<String, ZParams>, config: ZConfig },
}

impl MethodChoice {
    pub fn name(&self) -> &'static str {
        match self {
            MethodChoice::Inc { .. } => "inc",
            MethodChoice::Sos2 { .. } => "sos2",
            MethodChoice::Z { .. } => "z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Inc,
    Sos2,
    Z,
}

/// Segment-count grid for the direction-cut method on one pipeline:
/// pressure gradients up to the origin node's full pressure range, pressure
/// sums referenced to twice its upper bound.
pub fn default_z_grid(inst: &Instance, pipeline: &crate::instance::Pipeline, segments: usize) -> Result<PiecewiseGrid, BuildError> {
    let node = inst.node(&pipeline.from).expect("validated instance");
    let dp = crate::rat::to_f64(&(&node.p_max - &node.p_min)).round() as i64;
    let refsum = crate::rat::to_f64(&(&node.p_max * rat(2))).round() as i64;
    crate::grid::generate_grid(crate::rat::to_f64(&pipeline.r), dp, refsum, segments, None)
        .map_err(|source| BuildError::Grid { id: pipeline.id.clone(), source })
}

/// Build the per-pipeline method data from segment counts alone: the
/// separable methods get an equidistant union grid with `2*segments` flow
/// and `segments` pressure intervals (so `segments = 5` reproduces the
/// reference single-pipeline sizes); the direction-cut method generates its
/// integer grid and cut tables per pipeline.
pub fn default_method(inst: &Instance, kind: MethodKind, segments: usize) -> Result<MethodChoice, BuildError> {
    match kind {
        MethodKind::Inc | MethodKind::Sos2 => {
            let mut grids = HashMap::new();
            for l in &inst.pipelines {
                let node = inst.node(&l.from).expect("validated instance");
                let g = UnionGrid::equidistant(&l.f_max, 2 * segments, &node.p_min, &node.p_max, segments)
                    .map_err(|source| BuildError::UnionGrid { id: l.id.clone(), source })?;
                grids.insert(l.id.clone(), g);
            }
            Ok(match kind {
                MethodKind::Inc => MethodChoice::Inc { grids },
                _ => MethodChoice::Sos2 { grids },
            })
        }
        MethodKind::Z => {
            let mut grids = HashMap::new();
            let mut params = HashMap::new();
            for l in &inst.pipelines {
                let g = default_z_grid(inst, l, segments)?;
                params.insert(l.id.clone(), crate::ztables::compute_z_tables(&g));
                grids.insert(l.id.clone(), g);
            }
            Ok(MethodChoice::Z { grids, params, config: ZConfig::default() })
        }
    }
}

/// Incremental model construction with variable handles kept for later
/// blocks. Call the `add_*` blocks in any order after `new`, then `finish`.
pub struct Builder<'a> {
    inst: &'a Instance,
    model: MipModel,
    /// `[k][index into inst.<family>]`
    p_gas: Vec<Vec<VarId>>,
    p_elec: Vec<Vec<VarId>>,
    p_above: Vec<Vec<Option<VarId>>>,
    committed: Vec<Vec<Option<VarId>>>,
    started: Vec<Vec<Option<VarId>>>,
    stopped: Vec<Vec<Option<VarId>>>,
    gas_use: Vec<Vec<Option<VarId>>>,
    ns_elec: Vec<Vec<VarId>>,
    ns_gas: Vec<Vec<VarId>>,
    pressure: Vec<Vec<VarId>>,
    flow: Vec<Vec<VarId>>,
    flow_in: Vec<Vec<VarId>>,
    flow_out: Vec<Vec<VarId>>,
    linepack: Vec<Vec<VarId>>,
    comp_flow: Vec<Vec<VarId>>,
    angle: Vec<Vec<VarId>>,
    line_flow: Vec<Vec<VarId>>,
}

impl<'a> Builder<'a> {
    /// Create all base variables (bounds included) and the objective.
    pub fn new(inst: &'a Instance, model_name: impl Into<String>) -> Result<Self, BuildError> {
        let mut model = MipModel::new(model_name);
        let kk = inst.horizon;
        let mut b = Builder {
            inst,
            p_gas: vec![Vec::new(); kk],
            p_elec: vec![Vec::new(); kk],
            p_above: vec![Vec::new(); kk],
            committed: vec![Vec::new(); kk],
            started: vec![Vec::new(); kk],
            stopped: vec![Vec::new(); kk],
            gas_use: vec![Vec::new(); kk],
            ns_elec: vec![Vec::new(); kk],
            ns_gas: vec![Vec::new(); kk],
            pressure: vec![Vec::new(); kk],
            flow: vec![Vec::new(); kk],
            flow_in: vec![Vec::new(); kk],
            flow_out: vec![Vec::new(); kk],
            linepack: vec![Vec::new(); kk],
            comp_flow: vec![Vec::new(); kk],
            angle: vec![Vec::new(); kk],
            line_flow: vec![Vec::new(); kk],
            model: MipModel::new(""),
        };
        for k in 0..kk {
            let kd = k + 1; // 1-based in names
            for s in &inst.sources {
                let v = model.add_variable(VarSpec::continuous(
                    format!("pG[{kd},{}]", s.id),
                    Some(Rat::zero()),
                    Some(s.p_max.clone()),
                ))?;
                model.set_objective_term(v, s.cost.clone());
                b.p_gas[k].push(v);
            }
            for g in &inst.generators {
                let upper = match g.kind {
                    GeneratorKind::Thermal => g.p_max.clone(),
                    // dispatchable up to the per-period availability
                    GeneratorKind::Renewable => &g.p_max * inst.capacity_factor(&g.id, k),
                };
                let v = model.add_variable(VarSpec::continuous(
                    format!("pE[{kd},{}]", g.id),
                    Some(Rat::zero()),
                    Some(upper),
                ))?;
                model.set_objective_term(v, g.cost_om.clone());
                b.p_elec[k].push(v);
                if g.kind == GeneratorKind::Thermal {
                    let head = &g.p_max - &g.p_min;
                    b.p_above[k].push(Some(model.add_variable(VarSpec::continuous(
                        format!("pHat[{kd},{}]", g.id),
                        Some(Rat::zero()),
                        Some(head),
                    ))?));
                    b.committed[k].push(Some(model.add_variable(VarSpec::binary(format!("on[{kd},{}]", g.id)))?));
                    b.started[k].push(Some(model.add_variable(VarSpec::binary(format!("start[{kd},{}]", g.id)))?));
                    b.stopped[k].push(Some(model.add_variable(VarSpec::binary(format!("stop[{kd},{}]", g.id)))?));
                    b.gas_use[k].push(Some(model.add_variable(VarSpec::nonneg(format!("gasUse[{kd},{}]", g.id)))?));
                } else {
                    b.p_above[k].push(None);
                    b.committed[k].push(None);
                    b.started[k].push(None);
                    b.stopped[k].push(None);
                    b.gas_use[k].push(None);
                }
            }
            for bus in &inst.buses {
                let v = model.add_variable(VarSpec::continuous(
                    format!("nsE[{kd},{bus}]"),
                    Some(Rat::zero()),
                    Some(inst.electric_demand(bus, k)),
                ))?;
                model.set_objective_term(v, inst.cost_nse.clone());
                b.ns_elec[k].push(v);
                let free = if *bus == inst.slack_bus { Some(Rat::zero()) } else { None };
                b.angle[k].push(model.add_variable(VarSpec::continuous(
                    format!("theta[{kd},{bus}]"),
                    free.clone(),
                    free,
                ))?);
            }
            for n in &inst.nodes {
                let v = model.add_variable(VarSpec::continuous(
                    format!("nsG[{kd},{}]", n.id),
                    Some(Rat::zero()),
                    Some(inst.gas_demand(&n.id, k)),
                ))?;
                model.set_objective_term(v, inst.cost_nsg.clone());
                b.ns_gas[k].push(v);
                b.pressure[k].push(model.add_variable(VarSpec::continuous(
                    format!("pr[{kd},{}]", n.id),
                    Some(n.p_min.clone()),
                    Some(n.p_max.clone()),
                ))?);
            }
            for l in &inst.pipelines {
                b.flow[k].push(model.add_variable(VarSpec::continuous(
                    format!("f[{kd},{}]", l.id),
                    Some(-l.f_max.clone()),
                    Some(l.f_max.clone()),
                ))?);
                b.flow_in[k].push(model.add_variable(VarSpec::continuous(
                    format!("fIn[{kd},{}]", l.id),
                    Some(-l.f_max.clone()),
                    Some(l.f_max.clone()),
                ))?);
                b.flow_out[k].push(model.add_variable(VarSpec::continuous(
                    format!("fOut[{kd},{}]", l.id),
                    Some(-l.f_max.clone()),
                    Some(l.f_max.clone()),
                ))?);
                b.linepack[k].push(model.add_variable(VarSpec::nonneg(format!("lp[{kd},{}]", l.id)))?);
            }
            for c in &inst.compressors {
                b.comp_flow[k].push(model.add_variable(VarSpec::continuous(
                    format!("fC[{kd},{}]", c.id),
                    Some(Rat::zero()),
                    Some(c.f_max.clone()),
                ))?);
            }
            for e in &inst.lines {
                b.line_flow[k].push(model.add_variable(VarSpec::continuous(
                    format!("pl[{kd},{}]", e.id),
                    Some(-e.limit.clone()),
                    Some(e.limit.clone()),
                ))?);
            }
        }
        b.model = model;
        Ok(b)
    }

    pub fn model(&self) -> &MipModel {
        &self.model
    }

    pub fn finish(self) -> MipModel {
        self.model
    }

    /// Unit-commitment block for thermal units: output split, startup and
    /// shutdown output caps, ramp limits and commitment logic. Period 0
    /// state comes from the instance (`initial_on`, output-above-minimum 0).
    pub fn add_uc_block(&mut self) -> Result<Vec<&'static str>, BuildError> {
        let inst = self.inst;
        for k in 0..inst.horizon {
            for (gi, g) in inst.generators.iter().enumerate() {
                if g.kind != GeneratorKind::Thermal {
                    continue;
                }
                let pe = self.p_elec[k][gi];
                let ph = self.p_above[k][gi].unwrap();
                let u = self.committed[k][gi].unwrap();
                let y = self.started[k][gi].unwrap();
                let z = self.stopped[k][gi].unwrap();
                let head = &g.p_max - &g.p_min;
                let u0 = if g.initial_on { Rat::one() } else { Rat::zero() };
                // output = min-load * on + output-above-min
                self.model.add_constraint(
                    vec![(pe, rat(1)), (u, -g.p_min.clone()), (ph, rat(-1))],
                    Sense::Eq,
                    Rat::zero(),
                    "uc-output",
                )?;
                // no output above minimum in the startup hour
                self.model.add_constraint(
                    vec![(ph, rat(1)), (u, -head.clone()), (y, head.clone())],
                    Sense::Le,
                    Rat::zero(),
                    "uc-startup-cap",
                )?;
                // ... nor in the hour before a shutdown
                let mut t = vec![(ph, rat(1)), (u, -head.clone())];
                if k + 1 < inst.horizon {
                    t.push((self.stopped[k + 1][gi].unwrap(), head.clone()));
                }
                self.model.add_constraint(t, Sense::Le, Rat::zero(), "uc-shutdown-cap")?;
                // ramp-up: pHat_k - pHat_{k-1} <= RU * on_k
                let mut t = vec![(ph, rat(1)), (u, -g.ramp_up.clone())];
                if k > 0 {
                    t.push((self.p_above[k - 1][gi].unwrap(), rat(-1)));
                }
                self.model.add_constraint(t, Sense::Le, Rat::zero(), "uc-ramp-up")?;
                // ramp-down: pHat_k - pHat_{k-1} >= -RD * on_{k-1}
                let (mut t, rhs) = if k > 0 {
                    (
                        vec![
                            (ph, rat(1)),
                            (self.p_above[k - 1][gi].unwrap(), rat(-1)),
                            (self.committed[k - 1][gi].unwrap(), g.ramp_down.clone()),
                        ],
                        Rat::zero(),
                    )
                } else {
                    (vec![(ph, rat(1))], -(&g.ramp_down * &u0))
                };
                t.retain(|(_, a)| !a.is_zero());
                self.model.add_constraint(t, Sense::Ge, rhs, "uc-ramp-down")?;
                // on_k - on_{k-1} = start_k - stop_k
                let (mut t, rhs) = if k > 0 {
                    (
                        vec![
                            (u, rat(1)),
                            (self.committed[k - 1][gi].unwrap(), rat(-1)),
                            (y, rat(-1)),
                            (z, rat(1)),
                        ],
                        Rat::zero(),
                    )
                } else {
                    (vec![(u, rat(1)), (y, rat(-1)), (z, rat(1))], u0)
                };
                t.retain(|(_, a)| !a.is_zero());
                self.model.add_constraint(t, Sense::Eq, rhs, "uc-logic")?;
                self.model.add_constraint(vec![(y, rat(1)), (u, rat(-1))], Sense::Le, Rat::zero(), "uc-startup-logic")?;
                self.model.add_constraint(vec![(z, rat(1)), (u, rat(1))], Sense::Le, Rat::one(), "uc-shutdown-logic")?;
            }
        }
        Ok(vec![
            "uc-output",
            "uc-startup-cap",
            "uc-shutdown-cap",
            "uc-ramp-up",
            "uc-ramp-down",
            "uc-logic",
            "uc-startup-logic",
            "uc-shutdown-logic",
        ])
    }

    /// Gas-to-power coupling: gas use * heating value = output * conversion.
    pub fn add_gas_conversion(&mut self) -> Result<Vec<&'static str>, BuildError> {
        let inst = self.inst;
        for k in 0..inst.horizon {
            for (gi, g) in inst.generators.iter().enumerate() {
                if g.kind != GeneratorKind::Thermal {
                    continue;
                }
                self.model.add_constraint(
                    vec![
                        (self.gas_use[k][gi].unwrap(), inst.heating_value.clone()),
                        (self.p_elec[k][gi], -g.conversion.clone()),
                    ],
                    Sense::Eq,
                    Rat::zero(),
                    "gas-conversion",
                )?;
            }
        }
        Ok(vec!["gas-conversion"])
    }

    /// Linepack dynamics per pipeline: linepack tracks average pressure,
    /// follows a state-of-charge balance over periods (with loss factor),
    /// starts and ends at the initial level, and inflow/outflow average to
    /// the pipeline flow.
    pub fn add_linepack_block(&mut self) -> Result<Vec<&'static str>, BuildError> {
        let inst = self.inst;
        let half = ratio(1, 2);
        for (li, l) in inst.pipelines.iter().enumerate() {
            let m = inst.nodes.iter().position(|n| n.id == l.from).unwrap();
            let n = inst.nodes.iter().position(|n| n.id == l.to).unwrap();
            for k in 0..inst.horizon {
                let lp = self.linepack[k][li];
                // lp = LP * (p_m + p_n)/2
                self.model.add_constraint(
                    vec![
                        (lp, rat(1)),
                        (self.pressure[k][m], -(&l.lp_factor * &half)),
                        (self.pressure[k][n], -(&l.lp_factor * &half)),
                    ],
                    Sense::Eq,
                    Rat::zero(),
                    "linepack-pressure",
                )?;
                // lp_k = eta * lp_{k-1} + fIn - fOut   (lp_0 := initial)
                let (mut t, rhs) = if k > 0 {
                    (
                        vec![
                            (lp, rat(1)),
                            (self.linepack[k - 1][li], -l.efficiency.clone()),
                            (self.flow_in[k][li], rat(-1)),
                            (self.flow_out[k][li], rat(1)),
                        ],
                        Rat::zero(),
                    )
                } else {
                    (
                        vec![(lp, rat(1)), (self.flow_in[k][li], rat(-1)), (self.flow_out[k][li], rat(1))],
                        &l.efficiency * &l.lp_init,
                    )
                };
                t.retain(|(_, a)| !a.is_zero());
                self.model.add_constraint(t, Sense::Eq, rhs, "linepack-balance")?;
                // f = (fIn + fOut)/2
                self.model.add_constraint(
                    vec![
                        (self.flow[k][li], rat(1)),
                        (self.flow_in[k][li], -half.clone()),
                        (self.flow_out[k][li], -half.clone()),
                    ],
                    Sense::Eq,
                    Rat::zero(),
                    "flow-average",
                )?;
            }
            // first and last linepack pinned to the initial level
            self.model.add_constraint(vec![(self.linepack[0][li], rat(1))], Sense::Eq, l.lp_init.clone(), "linepack-boundary")?;
            if inst.horizon > 1 {
                self.model.add_constraint(
                    vec![(self.linepack[inst.horizon - 1][li], rat(1))],
                    Sense::Eq,
                    l.lp_init.clone(),
                    "linepack-boundary",
                )?;
            }
        }
        Ok(vec!["linepack-pressure", "linepack-balance", "flow-average", "linepack-boundary"])
    }

    /// Compressor pressure boost limits and the nodal gas balance. A
    /// compressor flow adds its self-consumption to the demand side of its
    /// origin node.
    pub fn add_compressors_and_balance(&mut self) -> Result<Vec<&'static str>, BuildError> {
        let inst = self.inst;
        for (ci, c) in inst.compressors.iter().enumerate() {
            let m = inst.nodes.iter().position(|n| n.id == c.from).unwrap();
            let n = inst.nodes.iter().position(|n| n.id == c.to).unwrap();
            for k in 0..inst.horizon {
                // p_out <= ratio * p_in
                self.model.add_constraint(
                    vec![(self.pressure[k][n], rat(1)), (self.pressure[k][m], -c.ratio.clone())],
                    Sense::Le,
                    Rat::zero(),
                    "compressor-ratio",
                )?;
                let _ = ci;
            }
        }
        for (ni, node) in inst.nodes.iter().enumerate() {
            for k in 0..inst.horizon {
                let mut t: Vec<(VarId, Rat)> = Vec::new();
                for (si, s) in inst.sources.iter().enumerate() {
                    if s.node == node.id {
                        t.push((self.p_gas[k][si], rat(1)));
                    }
                }
                for (li, l) in inst.pipelines.iter().enumerate() {
                    if l.to == node.id {
                        t.push((self.flow_out[k][li], rat(1)));
                    }
                    if l.from == node.id {
                        t.push((self.flow_in[k][li], rat(-1)));
                    }
                }
                for (ci, c) in inst.compressors.iter().enumerate() {
                    if c.to == node.id {
                        t.push((self.comp_flow[k][ci], rat(1)));
                    }
                    if c.from == node.id {
                        // outgoing flow plus its self-consumption
                        t.push((self.comp_flow[k][ci], -(Rat::one() + &c.consumption)));
                    }
                }
                for (gi, g) in inst.generators.iter().enumerate() {
                    if g.node.as_deref() == Some(node.id.as_str()) {
                        t.push((self.gas_use[k][gi].unwrap(), rat(-1)));
                    }
                }
                t.push((self.ns_gas[k][ni], rat(1)));
                // merge duplicate variables (a compressor may loop m -> m)
                let mut merged: Vec<(VarId, Rat)> = Vec::new();
                for (v, a) in t {
                    if let Some(e) = merged.iter_mut().find(|(w, _)| *w == v) {
                        e.1 += a;
                    } else {
                        merged.push((v, a));
                    }
                }
                merged.retain(|(_, a)| !a.is_zero());
                self.model.add_constraint(merged, Sense::Eq, inst.gas_demand(&node.id, k), "gas-balance")?;
            }
        }
        Ok(vec!["compressor-ratio", "gas-balance"])
    }

    /// DC power flow: line flow = susceptance * angle difference (slack bus
    /// angle fixed at zero via bounds), plus the bus power balance.
    pub fn add_power_flow(&mut self) -> Result<Vec<&'static str>, BuildError> {
        let inst = self.inst;
        for (ei, e) in inst.lines.iter().enumerate() {
            let a = inst.buses.iter().position(|b| *b == e.from).unwrap();
            let b = inst.buses.iter().position(|b| *b == e.to).unwrap();
            for k in 0..inst.horizon {
                self.model.add_constraint(
                    vec![
                        (self.line_flow[k][ei], rat(1)),
                        (self.angle[k][a], -e.susceptance.clone()),
                        (self.angle[k][b], e.susceptance.clone()),
                    ],
                    Sense::Eq,
                    Rat::zero(),
                    "line-flow",
                )?;
            }
        }
        for (bi, bus) in inst.buses.iter().enumerate() {
            for k in 0..inst.horizon {
                let mut t: Vec<(VarId, Rat)> = Vec::new();
                for (gi, g) in inst.generators.iter().enumerate() {
                    if g.bus == *bus {
                        t.push((self.p_elec[k][gi], rat(1)));
                    }
                }
                for (ei, e) in inst.lines.iter().enumerate() {
                    if e.to == *bus {
                        t.push((self.line_flow[k][ei], rat(1)));
                    }
                    if e.from == *bus {
                        t.push((self.line_flow[k][ei], rat(-1)));
                    }
                }
                t.push((self.ns_elec[k][bi], rat(1)));
                t.retain(|(_, a)| !a.is_zero());
                self.model.add_constraint(t, Sense::Eq, inst.electric_demand(bus, k), "power-balance")?;
            }
        }
        Ok(vec!["line-flow", "power-balance"])
    }

    /// Gas-flow linearization per pipeline and period with the chosen method.
    pub fn add_linearization(&mut self, method: &MethodChoice) -> Result<(), BuildError> {
        let inst = self.inst;
        for (li, l) in inst.pipelines.iter().enumerate() {
            let m = inst.nodes.iter().position(|n| n.id == l.from).unwrap();
            let n = inst.nodes.iter().position(|n| n.id == l.to).unwrap();
            for k in 0..inst.horizon {
                let prefix = format!("lin[{},{}]:", k + 1, l.id);
                let (f, pm, pn) = (self.flow[k][li], self.pressure[k][m], self.pressure[k][n]);
                match method {
                    MethodChoice::Inc { grids } => {
                        let grid = grids.get(&l.id).ok_or_else(|| BuildError::MissingGrid(l.id.clone()))?;
                        let cf = emit_inc_flow(&mut self.model, &format!("{prefix}f:"), f, grid)?;
                        let cm = emit_inc_pressure(&mut self.model, &format!("{prefix}m:"), pm, grid)?;
                        let cn = emit_inc_pressure(&mut self.model, &format!("{prefix}n:"), pn, grid)?;
                        link_inc(&mut self.model, &cf, &cm, &cn, &l.r)?;
                    }
                    MethodChoice::Sos2 { grids } => {
                        let grid = grids.get(&l.id).ok_or_else(|| BuildError::MissingGrid(l.id.clone()))?;
                        let cf = emit_sos2_flow(&mut self.model, &format!("{prefix}f:"), f, grid)?;
                        let cm = emit_sos2_pressure(&mut self.model, &format!("{prefix}m:"), pm, grid)?;
                        let cn = emit_sos2_pressure(&mut self.model, &format!("{prefix}n:"), pn, grid)?;
                        link_sos2(&mut self.model, grid, &cf, &cm, &cn, &l.r)?;
                    }
                    MethodChoice::Z { grids, params, config } => {
                        let grid = grids.get(&l.id).ok_or_else(|| BuildError::MissingGrid(l.id.clone()))?;
                        let zp = params.get(&l.id).ok_or_else(|| BuildError::MissingParams(l.id.clone()))?;
                        emit_z(&mut self.model, &prefix, f, pm, pn, grid, zp, config)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Build the full dispatch model: objective and bounds, UC, gas conversion,
/// linepack, compressors and balances, DC power flow, and the gas-flow
/// linearization.
pub fn build(inst: &Instance, method: &MethodChoice) -> Result<MipModel, BuildError> {
    let mut b = Builder::new(inst, format!("{}-{}", inst.name, method.name()))?;
    b.add_uc_block()?;
    b.add_gas_conversion()?;
    b.add_linepack_block()?;
    b.add_compressors_and_balance()?;
    b.add_power_flow()?;
    b.add_linearization(method)?;
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;
    use crate::solver::{solve_lp, solve_milp, LpStatus, MilpConfig, MilpStatus};
    use crate::ztables::compute_z_tables;

    /// one source, one node, flat demand, no pipelines/power: cost = C * D
    const TRIVIAL: &str = "
[meta]
name = t1
horizon = 1
[nodes]
n1 40 70
[sources]
s1 n1 100 10
[demand_gas]
n1 1
";

    fn inc_method(inst: &Instance, flow_segs: usize, p_segs: usize) -> MethodChoice {
        let mut grids = HashMap::new();
        for l in &inst.pipelines {
            let node = inst.node(&l.from).unwrap();
            grids.insert(
                l.id.clone(),
                UnionGrid::equidistant(&l.f_max, flow_segs, &node.p_min, &node.p_max, p_segs).unwrap(),
            );
        }
        MethodChoice::Inc { grids }
    }

    fn sos2_method(inst: &Instance, flow_segs: usize, p_segs: usize) -> MethodChoice {
        match inc_method(inst, flow_segs, p_segs) {
            MethodChoice::Inc { grids } => MethodChoice::Sos2 { grids },
            _ => unreachable!(),
        }
    }

    fn z_method(inst: &Instance, segments: usize) -> MethodChoice {
        let mut grids = HashMap::new();
        let mut params = HashMap::new();
        for l in &inst.pipelines {
            let node = inst.node(&l.from).unwrap();
            let refsum = crate::rat::to_f64(&(&node.p_max * rat(2)));
            let g = crate::grid::generate_grid(
                crate::rat::to_f64(&l.r),
                crate::rat::to_f64(&node.p_max).round() as i64,
                refsum.round() as i64,
                segments,
                None,
            )
            .unwrap();
            params.insert(l.id.clone(), compute_z_tables(&g));
            grids.insert(l.id.clone(), g);
        }
        MethodChoice::Z { grids, params, config: ZConfig::default() }
    }

    #[test]
    fn single_source_cost_is_demand_times_price() {
        let inst = parse_instance(TRIVIAL).unwrap();
        let m = build(&inst, &inc_method(&inst, 2, 1)).unwrap();
        assert!(m.is_lp()); // no pipelines -> no binaries at all
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 100.0).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn excess_demand_absorbed_by_slack_at_penalty() {
        let inst = parse_instance(&TRIVIAL.replace("\nn1 1\n", "\nn1 12\n")).unwrap();
        let m = build(&inst, &inc_method(&inst, 2, 1)).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        // 10 supplied at 100 plus 2 non-supplied at the 5000 default penalty
        assert!((s.objective - (1000.0 + 2.0 * 5000.0)).abs() < 1e-6, "{}", s.objective);
    }

    const TWO_NODE: &str = "
[meta]
name = t2
horizon = 2
slack_bus = b1
[nodes]
n1 43 68
n2 43 68
[pipelines]
l1 n1 n2 379.82 1026.65 42.84 2300 1.0
[sources]
s1 n1 110 1500
[generators]
g1 thermal b1 n2 480 280 200 200 4 1.96 0
[buses]
b1
[demand_electric]
b1 100 400
[demand_gas]
n2 50 60
";

    fn two_node() -> Instance {
        parse_instance(TWO_NODE).unwrap()
    }

    #[test]
    fn uc_identities_hold_on_solved_instance() {
        let inst = two_node();
        let m = build(&inst, &inc_method(&inst, 4, 2)).unwrap();
        let cfg = MilpConfig { rel_gap: 0.0, ..Default::default() };
        let s = solve_milp(&m, &cfg).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        let x = s.x.unwrap();
        let at = |name: &str| x[m.var_by_name(name).unwrap().index()];
        for k in 1..=2 {
            let (u, y, z) = (at(&format!("on[{k},g1]")), at(&format!("start[{k},g1]")), at(&format!("stop[{k},g1]")));
            let u_prev = if k == 1 { 0.0 } else { at(&format!("on[{},g1]", k - 1)) };
            assert!((y - z - (u - u_prev)).abs() < 1e-6, "commitment logic at k={k}");
            // output split: pE = Pmin*u + pHat
            let pe = at(&format!("pE[{k},g1]"));
            let ph = at(&format!("pHat[{k},g1]"));
            assert!((pe - (280.0 * u + ph)).abs() < 1e-6);
            // conversion: gasUse * H = pE * CS
            let gu = at(&format!("gasUse[{k},g1]"));
            assert!((gu * 11.0 - pe * 1.96).abs() < 1e-6);
        }
        // lossless pipeline: inflow and outflow balance over the horizon
        let total: f64 = (1..=2).map(|k| at(&format!("fIn[{k},l1]")) - at(&format!("fOut[{k},l1]"))).sum();
        assert!(total.abs() < 1e-6, "{total}");
    }

    #[test]
    fn inc_and_sos2_objectives_agree() {
        let inst = two_node();
        let cfg = MilpConfig { rel_gap: 0.0, ..Default::default() };
        let a = solve_milp(&build(&inst, &inc_method(&inst, 4, 2)).unwrap(), &cfg).unwrap();
        let b = solve_milp(&build(&inst, &sos2_method(&inst, 4, 2)).unwrap(), &cfg).unwrap();
        let (oa, ob) = (a.objective.unwrap(), b.objective.unwrap());
        assert!((oa - ob).abs() <= 1e-6 * oa.abs().max(1.0), "{oa} vs {ob}");
    }

    #[test]
    fn z_model_solves_and_stays_near_inc() {
        let inst = two_node();
        let cfg = MilpConfig { rel_gap: 0.0, ..Default::default() };
        let zi = solve_milp(&build(&inst, &z_method(&inst, 5)).unwrap(), &cfg).unwrap();
        let ii = solve_milp(&build(&inst, &inc_method(&inst, 4, 2)).unwrap(), &cfg).unwrap();
        assert_eq!(zi.status, MilpStatus::Optimal);
        let (oz, oi) = (zi.objective.unwrap(), ii.objective.unwrap());
        assert!((oz - oi).abs() <= 0.05 * oi.abs(), "z {oz} vs inc {oi}");
    }

    #[test]
    fn missing_grid_is_an_error() {
        let inst = two_node();
        let err = build(&inst, &MethodChoice::Inc { grids: HashMap::new() }).unwrap_err();
        assert!(matches!(err, BuildError::MissingGrid(_)));
    }

    #[test]
    fn every_constraint_is_tagged_and_counts_audit() {
        let inst = two_node();
        let m = build(&inst, &z_method(&inst, 5)).unwrap();
        assert!(m.constraints().iter().all(|c| !c.tag.is_empty()));
        // per-period, per-pipeline counts of a few families
        assert_eq!(m.count_tag("linepack-pressure"), 2);
        assert_eq!(m.count_tag("linepack-boundary"), 2);
        assert_eq!(m.count_tag("gas-balance"), 4); // 2 nodes x 2 periods
        assert_eq!(m.count_tag("uc-logic"), 2);
        // direction-cut family present once per (pipeline, period)
        assert_eq!(m.count_tag("flow-split"), 2);
    }
}

//! Instance files: a human-readable text schema for integrated power-gas
//! dispatch cases.
//!
//! The format is line-oriented with `#` comments and `[section]` headers:
//!
//! ```text
//! [meta]
//! name = toy2
//! horizon = 4             # periods (1 h each)
//! heating_value = 11      # MWh per kSm3 of gas
//! cost_nse = 3000         # $/MWh non-supplied electricity
//! cost_nsg = 5000         # $/kSm3 non-supplied gas
//! slack_bus = b1
//!
//! [nodes]                 # id  p_min  p_max      (barg)
//! n1 43 68
//!
//! [pipelines]             # id from to r f_max lp_factor lp_init efficiency
//! l1 n1 n2 379.82 1026.65 42.84 4000 1.0
//!
//! [compressors]           # id from to ratio f_max consumption
//! c1 n2 n3 1.5 1026.65 0.01
//!
//! [sources]               # id node cost p_max   ($/kSm3, kSm3/h)
//! s1 n1 110 1500
//!
//! [generators]
//! # id thermal   bus node p_max p_min ramp_up ramp_down cost_om conversion initial_on
//! # id renewable bus p_max cost_om
//! g1 thermal b1 n2 480 280 200 200 4 1.96 0
//! w1 renewable b2 300 1
//!
//! [buses]                 # id
//! b1
//!
//! [lines]                 # id from to susceptance limit (MW)
//! e1 b1 b2 10 500
//!
//! [demand_electric]       # bus v1 .. vK          (MW per period)
//! b1 100 120 90 80
//!
//! [demand_gas]            # node v1 .. vK         (kSm3/h per period)
//! n2 50 60 55 40
//!
//! [capacity_factors]      # renewable-generator v1 .. vK  (fraction of p_max)
//! w1 0.3 0.8 0.5 0.0
//! ```
//!
//! Units: gas in kSm3/h (matching the pipeline parameter table), pressures
//! in barg, power in MW/MWh, cost in $. Missing demand/capacity-factor rows
//! default to zeros. All numbers are plain decimals, parsed exactly.

use crate::rat::{parse_decimal, Rat};
use num::{One, Signed, Zero};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct GasNode {
    pub id: String,
    pub p_min: Rat,
    pub p_max: Rat,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub id: String,
    pub from: String,
    pub to: String,
    /// flow-pressure constant of the squared-flow relation
    pub r: Rat,
    pub f_max: Rat,
    pub lp_factor: Rat,
    pub lp_init: Rat,
    pub efficiency: Rat,
}

#[derive(Debug, Clone)]
pub struct Compressor {
    pub id: String,
    pub from: String,
    pub to: String,
    pub ratio: Rat,
    pub f_max: Rat,
    /// gas self-consumption per unit of compressed flow
    pub consumption: Rat,
}

#[derive(Debug, Clone)]
pub struct Source {
    pub id: String,
    pub node: String,
    pub cost: Rat,
    pub p_max: Rat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Thermal,
    Renewable,
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub id: String,
    pub kind: GeneratorKind,
    pub bus: String,
    /// gas node supplying the unit (thermal only)
    pub node: Option<String>,
    pub p_max: Rat,
    pub p_min: Rat,
    pub ramp_up: Rat,
    pub ramp_down: Rat,
    pub cost_om: Rat,
    /// gas conversion slope: gas use * heating value = power * conversion
    pub conversion: Rat,
    pub initial_on: bool,
}

#[derive(Debug, Clone)]
pub struct Line {
    pub id: String,
    pub from: String,
    pub to: String,
    pub susceptance: Rat,
    pub limit: Rat,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub horizon: usize,
    pub heating_value: Rat,
    pub cost_nse: Rat,
    pub cost_nsg: Rat,
    pub slack_bus: String,
    pub nodes: Vec<GasNode>,
    pub pipelines: Vec<Pipeline>,
    pub compressors: Vec<Compressor>,
    pub sources: Vec<Source>,
    pub generators: Vec<Generator>,
    pub buses: Vec<String>,
    pub lines: Vec<Line>,
    pub demand_electric: HashMap<String, Vec<Rat>>,
    pub demand_gas: HashMap<String, Vec<Rat>>,
    pub capacity_factors: HashMap<String, Vec<Rat>>,
}

impl Instance {
    pub fn node(&self, id: &str) -> Option<&GasNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Gas demand of `node` in period `k` (0-based); zero when absent.
    pub fn gas_demand(&self, node: &str, k: usize) -> Rat {
        self.demand_gas.get(node).map(|v| v[k].clone()).unwrap_or_else(Rat::zero)
    }

    /// Electric demand of `bus` in period `k` (0-based); zero when absent.
    pub fn electric_demand(&self, bus: &str, k: usize) -> Rat {
        self.demand_electric.get(bus).map(|v| v[k].clone()).unwrap_or_else(Rat::zero)
    }

    /// Capacity factor of renewable `gen` in period `k`; zero when absent.
    pub fn capacity_factor(&self, gen: &str, k: usize) -> Rat {
        self.capacity_factors.get(gen).map(|v| v[k].clone()).unwrap_or_else(Rat::zero)
    }

    fn validate(&self) -> Result<(), InstanceError> {
        let err = |m: String| Err(InstanceError::Invalid(m));
        if self.horizon == 0 {
            return err("horizon must be at least 1".into());
        }
        if !self.heating_value.is_positive() {
            return err("heating_value must be positive".into());
        }
        let node_ids: Vec<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        let bus_ids: Vec<&str> = self.buses.iter().map(|b| b.as_str()).collect();
        let has_node = |id: &str| node_ids.contains(&id);
        let has_bus = |id: &str| bus_ids.contains(&id);
        for n in &self.nodes {
            if n.p_min > n.p_max {
                return err(format!("node `{}`: p_min exceeds p_max", n.id));
            }
        }
        if !self.buses.is_empty() && !has_bus(&self.slack_bus) {
            return err(format!("slack_bus `{}` is not a bus", self.slack_bus));
        }
        for l in &self.pipelines {
            if !has_node(&l.from) || !has_node(&l.to) {
                return err(format!("pipeline `{}` references unknown node", l.id));
            }
            if !l.efficiency.is_positive() || l.efficiency > Rat::one() {
                return err(format!("pipeline `{}`: efficiency must be in (0,1]", l.id));
            }
            if !l.r.is_positive() || !l.f_max.is_positive() {
                return err(format!("pipeline `{}`: r and f_max must be positive", l.id));
            }
        }
        for c in &self.compressors {
            if !has_node(&c.from) || !has_node(&c.to) {
                return err(format!("compressor `{}` references unknown node", c.id));
            }
            if c.ratio < Rat::one() {
                return err(format!("compressor `{}`: ratio must be at least 1", c.id));
            }
        }
        for s in &self.sources {
            if !has_node(&s.node) {
                return err(format!("source `{}` references unknown node", s.id));
            }
            if s.p_max.is_negative() {
                return err(format!("source `{}`: p_max must be nonnegative", s.id));
            }
        }
        for g in &self.generators {
            if !has_bus(&g.bus) {
                return err(format!("generator `{}` references unknown bus", g.id));
            }
            match g.kind {
                GeneratorKind::Thermal => {
                    let Some(node) = &g.node else {
                        return err(format!("thermal generator `{}` needs a gas node", g.id));
                    };
                    if !has_node(node) {
                        return err(format!("generator `{}` references unknown node", g.id));
                    }
                    if g.p_min >= g.p_max {
                        return err(format!("generator `{}`: p_min must be below p_max", g.id));
                    }
                    if !g.ramp_up.is_positive() || !g.ramp_down.is_positive() {
                        return err(format!("generator `{}`: ramps must be positive", g.id));
                    }
                }
                GeneratorKind::Renewable => {
                    if g.p_max.is_negative() {
                        return err(format!("generator `{}`: p_max must be nonnegative", g.id));
                    }
                }
            }
        }
        for line in &self.lines {
            if !has_bus(&line.from) || !has_bus(&line.to) {
                return err(format!("line `{}` references unknown bus", line.id));
            }
        }
        for (what, map, known) in [
            ("demand_electric", &self.demand_electric, &bus_ids),
            ("demand_gas", &self.demand_gas, &node_ids),
        ] {
            for (id, series) in map {
                if !known.contains(&id.as_str()) {
                    return err(format!("{what} row `{id}` references unknown id"));
                }
                if series.len() != self.horizon {
                    return err(format!("{what} row `{id}` has {} values, horizon is {}", series.len(), self.horizon));
                }
                if series.iter().any(|v| v.is_negative()) {
                    return err(format!("{what} row `{id}` has negative values"));
                }
            }
        }
        for (id, series) in &self.capacity_factors {
            let Some(g) = self.generators.iter().find(|g| &g.id == id) else {
                return err(format!("capacity_factors row `{id}` references unknown generator"));
            };
            if g.kind != GeneratorKind::Renewable {
                return err(format!("capacity_factors row `{id}` must reference a renewable generator"));
            }
            if series.len() != self.horizon {
                return err(format!("capacity_factors row `{id}` has {} values, horizon is {}", series.len(), self.horizon));
            }
            if series.iter().any(|v| v.is_negative() || *v > Rat::one()) {
                return err(format!("capacity_factors row `{id}` must be within [0,1]"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for id in node_ids
            .iter()
            .copied()
            .chain(bus_ids.iter().copied())
            .chain(self.pipelines.iter().map(|l| l.id.as_str()))
            .chain(self.compressors.iter().map(|c| c.id.as_str()))
            .chain(self.sources.iter().map(|s| s.id.as_str()))
            .chain(self.generators.iter().map(|g| g.id.as_str()))
            .chain(self.lines.iter().map(|l| l.id.as_str()))
        {
            if !seen.insert(id) {
                return err(format!("duplicate id `{id}`"));
            }
        }
        Ok(())
    }
}

fn number(tok: &str, ln: usize) -> Result<Rat, InstanceError> {
    parse_decimal(tok).ok_or_else(|| InstanceError::Parse(ln, format!("bad number `{tok}`")))
}

fn series(toks: &[&str], ln: usize) -> Result<Vec<Rat>, InstanceError> {
    toks.iter().map(|t| number(t, ln)).collect()
}

/// Parse and validate an instance file.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut inst = Instance {
        name: String::new(),
        horizon: 1,
        heating_value: crate::rat::rat(11),
        cost_nse: crate::rat::rat(3000),
        cost_nsg: crate::rat::rat(5000),
        slack_bus: String::new(),
        nodes: Vec::new(),
        pipelines: Vec::new(),
        compressors: Vec::new(),
        sources: Vec::new(),
        generators: Vec::new(),
        buses: Vec::new(),
        lines: Vec::new(),
        demand_electric: HashMap::new(),
        demand_gas: HashMap::new(),
        capacity_factors: HashMap::new(),
    };
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let want = |n: usize| -> Result<(), InstanceError> {
            if toks.len() == n {
                Ok(())
            } else {
                Err(InstanceError::Parse(ln, format!("expected {n} fields, got {}", toks.len())))
            }
        };
        match section.as_str() {
            "meta" => {
                let Some((key, value)) = line.split_once('=') else {
                    return Err(InstanceError::Parse(ln, "meta lines are `key = value`".into()));
                };
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "name" => inst.name = value.to_string(),
                    "horizon" => {
                        inst.horizon = value
                            .parse()
                            .map_err(|_| InstanceError::Parse(ln, format!("bad horizon `{value}`")))?
                    }
                    "heating_value" => inst.heating_value = number(value, ln)?,
                    "cost_nse" => inst.cost_nse = number(value, ln)?,
                    "cost_nsg" => inst.cost_nsg = number(value, ln)?,
                    "slack_bus" => inst.slack_bus = value.to_string(),
                    other => return Err(InstanceError::Parse(ln, format!("unknown meta key `{other}`"))),
                }
            }
            "nodes" => {
                want(3)?;
                inst.nodes.push(GasNode {
                    id: toks[0].to_string(),
                    p_min: number(toks[1], ln)?,
                    p_max: number(toks[2], ln)?,
                });
            }
            "pipelines" => {
                want(8)?;
                inst.pipelines.push(Pipeline {
                    id: toks[0].to_string(),
                    from: toks[1].to_string(),
                    to: toks[2].to_string(),
                    r: number(toks[3], ln)?,
                    f_max: number(toks[4], ln)?,
                    lp_factor: number(toks[5], ln)?,
                    lp_init: number(toks[6], ln)?,
                    efficiency: number(toks[7], ln)?,
                });
            }
            "compressors" => {
                want(6)?;
                inst.compressors.push(Compressor {
                    id: toks[0].to_string(),
                    from: toks[1].to_string(),
                    to: toks[2].to_string(),
                    ratio: number(toks[3], ln)?,
                    f_max: number(toks[4], ln)?,
                    consumption: number(toks[5], ln)?,
                });
            }
            "sources" => {
                want(4)?;
                inst.sources.push(Source {
                    id: toks[0].to_string(),
                    node: toks[1].to_string(),
                    cost: number(toks[2], ln)?,
                    p_max: number(toks[3], ln)?,
                });
            }
            "generators" => {
                let kind = toks
                    .get(1)
                    .ok_or_else(|| InstanceError::Parse(ln, "generator needs a kind".into()))?;
                match *kind {
                    "thermal" => {
                        want(11)?;
                        inst.generators.push(Generator {
                            id: toks[0].to_string(),
                            kind: GeneratorKind::Thermal,
                            bus: toks[2].to_string(),
                            node: Some(toks[3].to_string()),
                            p_max: number(toks[4], ln)?,
                            p_min: number(toks[5], ln)?,
                            ramp_up: number(toks[6], ln)?,
                            ramp_down: number(toks[7], ln)?,
                            cost_om: number(toks[8], ln)?,
                            conversion: number(toks[9], ln)?,
                            initial_on: match toks[10] {
                                "0" => false,
                                "1" => true,
                                other => {
                                    return Err(InstanceError::Parse(ln, format!("initial_on must be 0 or 1, got `{other}`")))
                                }
                            },
                        });
                    }
                    "renewable" => {
                        want(5)?;
                        inst.generators.push(Generator {
                            id: toks[0].to_string(),
                            kind: GeneratorKind::Renewable,
                            bus: toks[2].to_string(),
                            node: None,
                            p_max: number(toks[3], ln)?,
                            p_min: Rat::zero(),
                            ramp_up: Rat::zero(),
                            ramp_down: Rat::zero(),
                            cost_om: number(toks[4], ln)?,
                            conversion: Rat::zero(),
                            initial_on: false,
                        });
                    }
                    other => return Err(InstanceError::Parse(ln, format!("unknown generator kind `{other}`"))),
                }
            }
            "buses" => {
                want(1)?;
                inst.buses.push(toks[0].to_string());
            }
            "lines" => {
                want(5)?;
                inst.lines.push(Line {
                    id: toks[0].to_string(),
                    from: toks[1].to_string(),
                    to: toks[2].to_string(),
                    susceptance: number(toks[3], ln)?,
                    limit: number(toks[4], ln)?,
                });
            }
            "demand_electric" => {
                inst.demand_electric.insert(toks[0].to_string(), series(&toks[1..], ln)?);
            }
            "demand_gas" => {
                inst.demand_gas.insert(toks[0].to_string(), series(&toks[1..], ln)?);
            }
            "capacity_factors" => {
                inst.capacity_factors.insert(toks[0].to_string(), series(&toks[1..], ln)?);
            }
            "" => return Err(InstanceError::Parse(ln, "data before first section".into())),
            other => return Err(InstanceError::Parse(ln, format!("unknown section `[{other}]`"))),
        }
    }
    inst.validate()?;
    Ok(inst)
}

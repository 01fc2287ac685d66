//! Solver-agnostic MILP intermediate representation.
//!
//! A [`MipModel`] is a bag of variables, linear constraints, SOS2 groups and
//! a minimization objective, all with exact rational coefficients. Every
//! constraint carries a `tag` naming the equation family it came from, so
//! per-equation counts can be audited.

mod mps;

pub use mps::{export_mps, export_mps_with_names, import_mps, objective_value, MpsError, MpsNames};

use crate::rat::{rat, Rat};
use num::{Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Opaque variable handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    /// Continuous member of an SOS2 group. Counted as continuous in stats.
    Sos2Member,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    /// `None` means -inf.
    pub lower: Option<Rat>,
    /// `None` means +inf.
    pub upper: Option<Rat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub terms: Vec<(VarId, Rat)>,
    pub sense: Sense,
    pub rhs: Rat,
    pub tag: String,
}

#[derive(Debug, Clone)]
pub struct Sos2Group {
    pub name: String,
    pub members: Vec<VarId>,
    pub weights: Vec<Rat>,
}

#[derive(Debug, Clone, Default)]
pub struct Objective {
    pub terms: Vec<(VarId, Rat)>,
    pub constant: Rat,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("variable `{0}`: lower bound exceeds upper bound")]
    InvertedBounds(String),
    #[error("binary variable `{0}` must have bounds within [0,1]")]
    BinaryBounds(String),
    #[error("constraint references unknown variable id {0}")]
    UnknownVariable(usize),
    #[error("constraint `{0}` has duplicate variable in terms")]
    DuplicateTerm(String),
    #[error("constraint tag must be nonempty")]
    EmptyTag,
    #[error("SOS2 group `{0}` needs at least 2 members")]
    Sos2TooSmall(String),
    #[error("SOS2 group `{0}` weights must be strictly increasing")]
    Sos2Weights(String),
}

/// Exact size counts of a model.
///
/// SOS2 member variables count as continuous; SOS2 groups are not
/// constraints; nonzeros are constraint left-hand-side terms with nonzero
/// coefficient (objective and right-hand sides excluded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelStats {
    pub n_constraints: usize,
    pub n_continuous: usize,
    pub n_binary: usize,
    pub n_sos2_groups: usize,
    pub n_nonzeros: usize,
}

#[derive(Debug, Clone, Default)]
pub struct MipModel {
    pub name: String,
    vars: Vec<Variable>,
    cons: Vec<LinearConstraint>,
    sos2: Vec<Sos2Group>,
    pub objective: Objective,
    by_name: HashMap<String, VarId>,
}

/// Bound/kind spec for [`MipModel::add_variable`].
#[derive(Debug, Clone)]
pub struct VarSpec {
    pub name: String,
    pub kind: VarKind,
    pub lower: Option<Rat>,
    pub upper: Option<Rat>,
}

impl VarSpec {
    pub fn continuous(name: impl Into<String>, lower: Option<Rat>, upper: Option<Rat>) -> Self {
        VarSpec { name: name.into(), kind: VarKind::Continuous, lower, upper }
    }

    /// Continuous and nonnegative, unbounded above.
    pub fn nonneg(name: impl Into<String>) -> Self {
        Self::continuous(name, Some(Rat::zero()), None)
    }

    pub fn binary(name: impl Into<String>) -> Self {
        VarSpec { name: name.into(), kind: VarKind::Binary, lower: Some(rat(0)), upper: Some(rat(1)) }
    }

    pub fn sos2_member(name: impl Into<String>) -> Self {
        VarSpec { name: name.into(), kind: VarKind::Sos2Member, lower: Some(rat(0)), upper: None }
    }
}

impl MipModel {
    pub fn new(name: impl Into<String>) -> Self {
        MipModel { name: name.into(), ..Default::default() }
    }

    pub fn add_variable(&mut self, spec: VarSpec) -> Result<VarId, ModelError> {
        if self.by_name.contains_key(&spec.name) {
            return Err(ModelError::DuplicateName(spec.name));
        }
        if let (Some(lo), Some(up)) = (&spec.lower, &spec.upper) {
            if lo > up {
                return Err(ModelError::InvertedBounds(spec.name));
            }
        }
        if spec.kind == VarKind::Binary {
            let lo_ok = spec.lower.as_ref().is_some_and(|l| !l.is_negative());
            let up_ok = spec.upper.as_ref().is_some_and(|u| *u <= rat(1));
            if !lo_ok || !up_ok {
                return Err(ModelError::BinaryBounds(spec.name));
            }
        }
        let id = VarId(self.vars.len());
        self.by_name.insert(spec.name.clone(), id);
        self.vars.push(Variable { name: spec.name, kind: spec.kind, lower: spec.lower, upper: spec.upper });
        Ok(id)
    }

    pub fn add_constraint(
        &mut self,
        terms: Vec<(VarId, Rat)>,
        sense: Sense,
        rhs: Rat,
        tag: impl Into<String>,
    ) -> Result<(), ModelError> {
        let tag = tag.into();
        if tag.is_empty() {
            return Err(ModelError::EmptyTag);
        }
        let mut seen = vec![false; self.vars.len()];
        for (v, _) in &terms {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable(v.0));
            }
            if seen[v.0] {
                return Err(ModelError::DuplicateTerm(tag));
            }
            seen[v.0] = true;
        }
        self.cons.push(LinearConstraint { terms, sense, rhs, tag });
        Ok(())
    }

    pub fn add_sos2(
        &mut self,
        name: impl Into<String>,
        members: Vec<VarId>,
        weights: Vec<Rat>,
    ) -> Result<(), ModelError> {
        let name = name.into();
        if members.len() < 2 || members.len() != weights.len() {
            return Err(ModelError::Sos2TooSmall(name));
        }
        for (v, _) in members.iter().zip(&weights) {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable(v.0));
            }
        }
        if weights.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::Sos2Weights(name));
        }
        self.sos2.push(Sos2Group { name, members, weights });
        Ok(())
    }

    pub fn set_objective_term(&mut self, var: VarId, coeff: Rat) {
        if let Some(t) = self.objective.terms.iter_mut().find(|(v, _)| *v == var) {
            t.1 += coeff;
        } else {
            self.objective.terms.push((var, coeff));
        }
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn variables(&self) -> impl Iterator<Item = (VarId, &Variable)> {
        self.vars.iter().enumerate().map(|(i, v)| (VarId(i), v))
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.cons
    }

    pub fn sos2_groups(&self) -> &[Sos2Group] {
        &self.sos2
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    /// Exact counts; see [`ModelStats`] for the counting convention.
    pub fn stats(&self) -> ModelStats {
        let mut n_binary = 0;
        let mut n_continuous = 0;
        for v in &self.vars {
            match v.kind {
                VarKind::Binary => n_binary += 1,
                VarKind::Continuous | VarKind::Sos2Member => n_continuous += 1,
            }
        }
        let n_nonzeros = self
            .cons
            .iter()
            .map(|c| c.terms.iter().filter(|(_, a)| !a.is_zero()).count())
            .sum();
        ModelStats {
            n_constraints: self.cons.len(),
            n_continuous,
            n_binary,
            n_sos2_groups: self.sos2.len(),
            n_nonzeros,
        }
    }

    /// Count of constraints whose tag equals `tag`.
    pub fn count_tag(&self, tag: &str) -> usize {
        self.cons.iter().filter(|c| c.tag == tag).count()
    }

    /// LP relaxation: binaries become continuous on [0,1], SOS2 groups are
    /// dropped (members keep their bounds), constraints unchanged.
    pub fn relax(&self) -> MipModel {
        let mut m = self.clone();
        for v in &mut m.vars {
            match v.kind {
                VarKind::Binary => {
                    v.kind = VarKind::Continuous;
                    v.lower = Some(rat(0));
                    v.upper = Some(rat(1));
                }
                VarKind::Sos2Member => v.kind = VarKind::Continuous,
                VarKind::Continuous => {}
            }
        }
        m.sos2.clear();
        m
    }

    /// True if the model has no binaries and no SOS2 groups.
    pub fn is_lp(&self) -> bool {
        self.sos2.is_empty() && self.vars.iter().all(|v| v.kind != VarKind::Binary)
    }

    /// Check a point for exact feasibility (bounds, constraints, SOS2
    /// adjacency). Returns one message per violated condition; empty means
    /// feasible. All comparisons are exact rational, no tolerance.
    pub fn violations(&self, x: &[Rat]) -> Vec<String> {
        let mut out = Vec::new();
        if x.len() != self.vars.len() {
            out.push(format!("point has {} coordinates, model has {} variables", x.len(), self.vars.len()));
            return out;
        }
        for (i, v) in self.vars.iter().enumerate() {
            if let Some(lo) = &v.lower {
                if &x[i] < lo {
                    out.push(format!("variable `{}` below lower bound", v.name));
                }
            }
            if let Some(up) = &v.upper {
                if &x[i] > up {
                    out.push(format!("variable `{}` above upper bound", v.name));
                }
            }
        }
        for c in &self.cons {
            let lhs: Rat = c.terms.iter().map(|(v, a)| a * &x[v.0]).sum();
            let ok = match c.sense {
                Sense::Le => lhs <= c.rhs,
                Sense::Eq => lhs == c.rhs,
                Sense::Ge => lhs >= c.rhs,
            };
            if !ok {
                out.push(format!("constraint `{}` violated: {} {} {}", c.tag, lhs, c.sense, c.rhs));
            }
        }
        for g in &self.sos2 {
            let nz: Vec<usize> = g
                .members
                .iter()
                .enumerate()
                .filter(|(_, v)| !x[v.0].is_zero())
                .map(|(j, _)| j)
                .collect();
            let ok = match nz.len() {
                0 | 1 => true,
                2 => nz[1] == nz[0] + 1,
                _ => false,
            };
            if !ok {
                out.push(format!("SOS2 group `{}` has non-adjacent nonzeros", g.name));
            }
        }
        out
    }

    /// Structured JSON dump of the model for debugging. Rationals are
    /// rendered as `"num/den"` strings; missing bounds as null.
    pub fn dump_json(&self) -> serde_json::Value {
        use serde_json::json;
        let ratstr = |r: &Rat| format!("{}/{}", r.numer(), r.denom());
        let bound = |b: &Option<Rat>| b.as_ref().map(&ratstr);
        json!({
            "name": self.name,
            "direction": "minimize",
            "variables": self.vars.iter().map(|v| json!({
                "name": v.name,
                "kind": match v.kind {
                    VarKind::Continuous => "continuous",
                    VarKind::Binary => "binary",
                    VarKind::Sos2Member => "sos2-member",
                },
                "lower": bound(&v.lower),
                "upper": bound(&v.upper),
            })).collect::<Vec<_>>(),
            "constraints": self.cons.iter().map(|c| json!({
                "tag": c.tag,
                "sense": c.sense.to_string(),
                "rhs": ratstr(&c.rhs),
                "terms": c.terms.iter().map(|(v, a)| json!([self.vars[v.0].name, ratstr(a)])).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "sos2": self.sos2.iter().map(|g| json!({
                "name": g.name,
                "members": g.members.iter().map(|v| self.vars[v.0].name.clone()).collect::<Vec<_>>(),
                "weights": g.weights.iter().map(&ratstr).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "objective": {
                "constant": ratstr(&self.objective.constant),
                "terms": self.objective.terms.iter().map(|(v, a)| json!([self.vars[v.0].name, ratstr(a)])).collect::<Vec<_>>(),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;

    #[test]
    fn add_binary_has_unit_bounds() {
        let mut m = MipModel::new("t");
        let id = m.add_variable(VarSpec::binary("xi[k1,l1]")).unwrap();
        assert_eq!(m.var(id).lower, Some(rat(0)));
        assert_eq!(m.var(id).upper, Some(rat(1)));
    }

    #[test]
    fn add_continuous_unbounded_above() {
        let mut m = MipModel::new("t");
        let id = m.add_variable(VarSpec::nonneg("x")).unwrap();
        assert_eq!(m.var(id).lower, Some(rat(0)));
        assert_eq!(m.var(id).upper, None);
    }

    #[test]
    fn inverted_bounds_rejected() {
        let mut m = MipModel::new("t");
        let err = m
            .add_variable(VarSpec::continuous("x", Some(rat(1)), Some(rat(0))))
            .unwrap_err();
        assert_eq!(err, ModelError::InvertedBounds("x".into()));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut m = MipModel::new("t");
        m.add_variable(VarSpec::nonneg("x")).unwrap();
        assert!(matches!(m.add_variable(VarSpec::nonneg("x")), Err(ModelError::DuplicateName(_))));
    }

    #[test]
    fn empty_model_stats_zero() {
        let m = MipModel::new("t");
        assert_eq!(m.stats(), ModelStats::default());
    }

    #[test]
    fn stats_counts_and_relax() {
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::nonneg("x")).unwrap();
        let b = m.add_variable(VarSpec::binary("b")).unwrap();
        let l1 = m.add_variable(VarSpec::sos2_member("l1")).unwrap();
        let l2 = m.add_variable(VarSpec::sos2_member("l2")).unwrap();
        m.add_constraint(vec![(x, rat(1)), (b, rat(2)), (l1, rat(0))], Sense::Le, rat(3), "c1")
            .unwrap();
        m.add_sos2("g", vec![l1, l2], vec![rat(0), rat(1)]).unwrap();
        let s = m.stats();
        assert_eq!(s.n_constraints, 1);
        assert_eq!(s.n_continuous, 3); // x + 2 sos2 members
        assert_eq!(s.n_binary, 1);
        assert_eq!(s.n_sos2_groups, 1);
        assert_eq!(s.n_nonzeros, 2); // explicit zero coefficient not counted

        let r = m.relax();
        let rs = r.stats();
        assert_eq!(rs.n_binary, 0);
        assert_eq!(rs.n_continuous, 4);
        assert_eq!(rs.n_sos2_groups, 0);
        assert_eq!(rs.n_constraints, s.n_constraints);
        assert!(r.is_lp());
    }

    #[test]
    fn relax_of_continuous_model_is_identity() {
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::continuous("x", Some(ratio(-1, 2)), None)).unwrap();
        m.add_constraint(vec![(x, rat(1))], Sense::Ge, rat(0), "c").unwrap();
        let r = m.relax();
        assert_eq!(r.stats(), m.stats());
        assert_eq!(r.var(x).lower, m.var(x).lower);
    }

    #[test]
    fn duplicate_term_rejected() {
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::nonneg("x")).unwrap();
        let err = m
            .add_constraint(vec![(x, rat(1)), (x, rat(2))], Sense::Eq, rat(0), "c")
            .unwrap_err();
        assert!(matches!(err, ModelError::DuplicateTerm(_)));
    }
}

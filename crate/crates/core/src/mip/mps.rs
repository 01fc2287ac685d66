//! Fixed-form MPS export and import.
//!
//! Layout follows the classic section order NAME / ROWS / COLUMNS (with
//! INTORG markers for binaries) / RHS / BOUNDS / SOS / ENDATA. Fields are
//! whitespace-separated and padded to the classic column layout whenever
//! names fit. Names longer than 8 characters (or containing blanks) are
//! mangled deterministically to `V<i>` / `R<i>` with a collision check.
//!
//! Numbers are written as the shortest exact decimal when the denominator is
//! a product of 2s and 5s, otherwise as a 17-significant-digit float.

use super::{MipModel, ModelError, Sense, VarId, VarKind, VarSpec};
use crate::rat::{from_f64, parse_decimal, to_decimal_string, to_f64, Rat};
use num::{One, Zero};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("MPS parse error at line {0}: {1}")]
    Parse(usize, String),
    #[error("model error during import: {0}")]
    Model(#[from] ModelError),
}

const NAME_LIMIT: usize = 8;

/// Maps between model names and (possibly mangled) MPS names.
#[derive(Debug, Default, Clone)]
pub struct MpsNames {
    pub var_to_mps: Vec<String>,
    pub mps_to_var: HashMap<String, VarId>,
}

fn mangle(names: impl Iterator<Item = String>, prefix: char) -> Vec<String> {
    let originals: Vec<String> = names.collect();
    let keep: Vec<bool> = originals
        .iter()
        .map(|n| n.len() <= NAME_LIMIT && !n.is_empty() && n.chars().all(|c| c.is_ascii_graphic()))
        .collect();
    let kept: std::collections::HashSet<&String> =
        originals.iter().zip(&keep).filter(|(_, k)| **k).map(|(n, _)| n).collect();
    let mut out = Vec::with_capacity(originals.len());
    let mut used = std::collections::HashSet::new();
    for (i, (n, k)) in originals.iter().zip(&keep).enumerate() {
        if *k && used.insert(n.clone()) {
            out.push(n.clone());
        } else {
            let mut cand = format!("{prefix}{i}");
            while kept.contains(&cand) || used.contains(&cand) {
                cand = format!("{prefix}{i}_{}", used.len());
            }
            used.insert(cand.clone());
            out.push(cand);
        }
    }
    out
}

fn num(r: &Rat) -> String {
    to_decimal_string(r)
}

/// Serialize the model as MPS text.
pub fn export_mps(model: &MipModel) -> String {
    export_mps_with_names(model).0
}

/// Serialize and return the name maps (needed to read solutions back from
/// external solvers).
pub fn export_mps_with_names(model: &MipModel) -> (String, MpsNames) {
    let var_names = mangle(model.variables().map(|(_, v)| v.name.clone()), 'V');
    let row_names = mangle(model.constraints().iter().map(|c| c.tag.clone()).enumerate().map(|(i, t)| {
        // tags repeat per equation family; row names must be unique
        format!("{t}_{i}")
    }), 'R');
    let mut names = MpsNames::default();
    names.var_to_mps = var_names.clone();
    for (i, n) in var_names.iter().enumerate() {
        names.mps_to_var.insert(n.clone(), VarId(i));
    }

    let mut s = String::new();
    let model_name: String = model.name.chars().filter(|c| c.is_ascii_graphic()).take(NAME_LIMIT).collect();
    let _ = writeln!(s, "NAME          {model_name}");
    let _ = writeln!(s, "ROWS");
    let _ = writeln!(s, " N  COST");
    for (i, c) in model.constraints().iter().enumerate() {
        let t = match c.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
            Sense::Ge => 'G',
        };
        let _ = writeln!(s, " {t}  {}", row_names[i]);
    }
    let _ = writeln!(s, "COLUMNS");
    // gather per-column entries: objective first, then rows in order
    let mut col_entries: Vec<Vec<(String, Rat)>> = vec![Vec::new(); model.n_vars()];
    for (v, a) in &model.objective.terms {
        if !a.is_zero() {
            col_entries[v.0].push(("COST".to_string(), a.clone()));
        }
    }
    for (i, c) in model.constraints().iter().enumerate() {
        for (v, a) in &c.terms {
            if !a.is_zero() {
                col_entries[v.0].push((row_names[i].clone(), a.clone()));
            }
        }
    }
    let mut in_int = false;
    let mut marker = 0usize;
    for (id, v) in model.variables() {
        let want_int = v.kind == VarKind::Binary;
        if want_int != in_int {
            let m = if want_int { "INTORG" } else { "INTEND" };
            let _ = writeln!(s, "    MARKER{marker:<8}'MARKER'                 '{m}'");
            marker += 1;
            in_int = want_int;
        }
        let cn = &var_names[id.0];
        for pair in col_entries[id.0].chunks(2) {
            let mut line = format!("    {cn:<10} {:<10} {:<15}", pair[0].0, num(&pair[0].1));
            if let Some(p2) = pair.get(1) {
                let _ = write!(line, " {:<10} {}", p2.0, num(&p2.1));
            }
            let _ = writeln!(s, "{}", line.trim_end());
        }
        if col_entries[id.0].is_empty() {
            // column must still exist; emit a zero objective entry
            let _ = writeln!(s, "    {cn:<10}COST      0");
        }
    }
    if in_int {
        let _ = writeln!(s, "    MARKER{marker:<8}'MARKER'                 'INTEND'");
    }
    let _ = writeln!(s, "RHS");
    if !model.objective.constant.is_zero() {
        let c = -model.objective.constant.clone();
        let _ = writeln!(s, "    RHS1      COST      {}", num(&c));
    }
    for (i, c) in model.constraints().iter().enumerate() {
        if !c.rhs.is_zero() {
            let _ = writeln!(s, "    RHS1      {:<10} {}", row_names[i], num(&c.rhs));
        }
    }
    let _ = writeln!(s, "BOUNDS");
    for (id, v) in model.variables() {
        let cn = &var_names[id.0];
        match (&v.lower, &v.upper) {
            (Some(lo), Some(up)) if lo == up => {
                let _ = writeln!(s, " FX BND1      {cn:<10} {}", num(lo));
            }
            (lo, up) => {
                match lo {
                    Some(l) if !l.is_zero() => {
                        let _ = writeln!(s, " LO BND1      {cn:<10} {}", num(l));
                    }
                    None => {
                        let _ = writeln!(s, " MI BND1      {cn}");
                    }
                    _ => {}
                }
                if let Some(u) = up {
                    let _ = writeln!(s, " UP BND1      {cn:<10} {}", num(u));
                }
            }
        }
    }
    if !model.sos2_groups().is_empty() {
        let _ = writeln!(s, "SOS");
        for (gi, g) in model.sos2_groups().iter().enumerate() {
            let _ = writeln!(s, " S2 SOS{gi}");
            for (m, w) in g.members.iter().zip(&g.weights) {
                let _ = writeln!(s, "    {:<10} {}", var_names[m.0], num(w));
            }
        }
    }
    let _ = writeln!(s, "ENDATA");
    (s, names)
}

fn parse_number(tok: &str, line_no: usize) -> Result<Rat, MpsError> {
    if let Some(r) = parse_decimal(tok) {
        return Ok(r);
    }
    tok.parse::<f64>()
        .ok()
        .and_then(from_f64)
        .ok_or_else(|| MpsError::Parse(line_no, format!("bad number `{tok}`")))
}

/// Parse MPS text produced by [`export_mps`] (and common fixed-form files)
/// back into a model.
pub fn import_mps(text: &str) -> Result<MipModel, MpsError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Rows,
        Columns,
        Rhs,
        Ranges,
        Bounds,
        Sos,
    }
    let mut model = MipModel::new("");
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut row_sense: HashMap<String, Sense> = HashMap::new();
    let mut row_order: Vec<String> = Vec::new();
    let mut row_terms: HashMap<String, Vec<(VarId, Rat)>> = HashMap::new();
    let mut row_rhs: HashMap<String, Rat> = HashMap::new();
    let mut obj_terms: Vec<(VarId, Rat)> = Vec::new();
    let mut obj_const = Rat::zero();
    let mut int_mode = false;
    let mut var_kind: Vec<VarKind> = Vec::new();
    let mut var_bounds: Vec<(Option<Option<Rat>>, Option<Option<Rat>>)> = Vec::new(); // explicit overrides
    let mut sos_sets: Vec<(Vec<VarId>, Vec<Rat>)> = Vec::new();

    let ensure_var = |model: &mut MipModel,
                          var_kind: &mut Vec<VarKind>,
                          var_bounds: &mut Vec<(Option<Option<Rat>>, Option<Option<Rat>>)>,
                          name: &str,
                          int_mode: bool|
     -> VarId {
        if let Some(id) = model.var_by_name(name) {
            id
        } else {
            let id = model.add_variable(VarSpec::nonneg(name)).expect("fresh name");
            var_kind.push(if int_mode { VarKind::Binary } else { VarKind::Continuous });
            var_bounds.push((None, None));
            id
        }
    };

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let starts_at_col0 = !raw.starts_with(' ');
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if starts_at_col0 {
            match toks[0] {
                "NAME" => {
                    model.name = toks.get(1).unwrap_or(&"").to_string();
                    continue;
                }
                "ROWS" => {
                    section = Section::Rows;
                    continue;
                }
                "COLUMNS" => {
                    section = Section::Columns;
                    continue;
                }
                "RHS" => {
                    section = Section::Rhs;
                    continue;
                }
                "RANGES" => {
                    section = Section::Ranges;
                    continue;
                }
                "BOUNDS" => {
                    section = Section::Bounds;
                    continue;
                }
                "SOS" => {
                    section = Section::Sos;
                    continue;
                }
                "ENDATA" => break,
                other => return Err(MpsError::Parse(line_no, format!("unknown section `{other}`"))),
            }
        }
        match section {
            Section::Rows => {
                let (t, name) = (toks[0], toks.get(1).ok_or_else(|| MpsError::Parse(line_no, "row name missing".into()))?);
                match t {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(name.to_string());
                        }
                    }
                    "L" | "G" | "E" => {
                        let sense = match t {
                            "L" => Sense::Le,
                            "G" => Sense::Ge,
                            _ => Sense::Eq,
                        };
                        row_sense.insert(name.to_string(), sense);
                        row_order.push(name.to_string());
                        row_terms.insert(name.to_string(), Vec::new());
                    }
                    other => return Err(MpsError::Parse(line_no, format!("bad row type `{other}`"))),
                }
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1] == "'MARKER'" {
                    int_mode = raw.contains("'INTORG'");
                    continue;
                }
                let col = toks[0];
                let id = ensure_var(&mut model, &mut var_kind, &mut var_bounds, col, int_mode);
                let mut i = 1;
                while i + 1 < toks.len() {
                    let row = toks[i];
                    let val = parse_number(toks[i + 1], line_no)?;
                    if Some(row) == obj_row.as_deref() {
                        if !val.is_zero() {
                            obj_terms.push((id, val));
                        }
                    } else if let Some(terms) = row_terms.get_mut(row) {
                        if !val.is_zero() {
                            terms.push((id, val));
                        }
                    } else {
                        return Err(MpsError::Parse(line_no, format!("unknown row `{row}`")));
                    }
                    i += 2;
                }
            }
            Section::Rhs => {
                let mut i = 1;
                while i + 1 < toks.len() {
                    let row = toks[i];
                    let val = parse_number(toks[i + 1], line_no)?;
                    if Some(row) == obj_row.as_deref() {
                        obj_const = -val;
                    } else {
                        row_rhs.insert(row.to_string(), val);
                    }
                    i += 2;
                }
            }
            Section::Ranges => {
                return Err(MpsError::Parse(line_no, "RANGES not supported".into()));
            }
            Section::Bounds => {
                let btype = toks[0];
                let col = toks.get(2).ok_or_else(|| MpsError::Parse(line_no, "bound column missing".into()))?;
                let id = model
                    .var_by_name(col)
                    .ok_or_else(|| MpsError::Parse(line_no, format!("bound for unknown column `{col}`")))?;
                let val = || -> Result<Rat, MpsError> {
                    parse_number(toks.get(3).ok_or_else(|| MpsError::Parse(line_no, "bound value missing".into()))?, line_no)
                };
                match btype {
                    "LO" => var_bounds[id.0].0 = Some(Some(val()?)),
                    "UP" => var_bounds[id.0].1 = Some(Some(val()?)),
                    "FX" => {
                        let v = val()?;
                        var_bounds[id.0].0 = Some(Some(v.clone()));
                        var_bounds[id.0].1 = Some(Some(v));
                    }
                    "MI" => var_bounds[id.0].0 = Some(None),
                    "PL" => var_bounds[id.0].1 = Some(None),
                    "FR" => {
                        var_bounds[id.0].0 = Some(None);
                        var_bounds[id.0].1 = Some(None);
                    }
                    "BV" => {
                        var_kind[id.0] = VarKind::Binary;
                        var_bounds[id.0].0 = Some(Some(Rat::zero()));
                        var_bounds[id.0].1 = Some(Some(Rat::one()));
                    }
                    other => return Err(MpsError::Parse(line_no, format!("bound type `{other}` not supported"))),
                }
            }
            Section::Sos => {
                if toks[0] == "S2" {
                    sos_sets.push((Vec::new(), Vec::new()));
                } else if toks[0] == "S1" {
                    return Err(MpsError::Parse(line_no, "only S2 sets supported".into()));
                } else {
                    let set = sos_sets
                        .last_mut()
                        .ok_or_else(|| MpsError::Parse(line_no, "SOS entry before set header".into()))?;
                    let id = model
                        .var_by_name(toks[0])
                        .ok_or_else(|| MpsError::Parse(line_no, format!("SOS member `{}` unknown", toks[0])))?;
                    set.0.push(id);
                    set.1.push(parse_number(toks[1], line_no)?);
                }
            }
            Section::None => return Err(MpsError::Parse(line_no, "data before first section".into())),
        }
    }

    // rebuild the model with final kinds/bounds in variable order
    let mut out = MipModel::new(model.name.clone());
    let sos_member: std::collections::HashSet<VarId> =
        sos_sets.iter().flat_map(|(m, _)| m.iter().copied()).collect();
    for (id, v) in model.variables() {
        let kind = if var_kind[id.0] == VarKind::Binary {
            VarKind::Binary
        } else if sos_member.contains(&id) {
            VarKind::Sos2Member
        } else {
            VarKind::Continuous
        };
        let lower = match &var_bounds[id.0].0 {
            Some(b) => b.clone(),
            None => {
                if kind == VarKind::Binary {
                    Some(Rat::zero())
                } else {
                    Some(Rat::zero())
                }
            }
        };
        let upper = match &var_bounds[id.0].1 {
            Some(b) => b.clone(),
            None => {
                if kind == VarKind::Binary {
                    Some(Rat::one())
                } else {
                    None
                }
            }
        };
        out.add_variable(VarSpec { name: v.name.clone(), kind, lower, upper })?;
    }
    for row in &row_order {
        let terms = row_terms.remove(row).unwrap_or_default();
        let rhs = row_rhs.remove(row).unwrap_or_else(Rat::zero);
        out.add_constraint(terms, row_sense[row], rhs, row.clone())?;
    }
    for (gi, (members, weights)) in sos_sets.into_iter().enumerate() {
        out.add_sos2(format!("SOS{gi}"), members, weights)?;
    }
    for (v, a) in obj_terms {
        out.set_objective_term(v, a);
    }
    out.objective.constant = obj_const;
    Ok(out)
}

/// Evaluate objective and constraint feasibility of a named-value solution
/// against a model. Used by tests and the external-solver adapter.
pub fn objective_value(model: &MipModel, values: &[f64]) -> f64 {
    let mut obj = to_f64(&model.objective.constant);
    for (v, a) in &model.objective.terms {
        obj += to_f64(a) * values[v.0];
    }
    obj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    fn toy() -> MipModel {
        let mut m = MipModel::new("toy");
        let x = m.add_variable(VarSpec::nonneg("x")).unwrap();
        m.add_constraint(vec![(x, rat(2))], Sense::Le, rat(5), "c").unwrap();
        m.set_objective_term(x, rat(-1));
        m
    }

    #[test]
    fn smoke_export() {
        let text = export_mps(&toy());
        assert!(text.contains("ROWS"));
        assert!(text.contains("ENDATA"));
        let back = import_mps(&text).unwrap();
        assert_eq!(back.stats(), toy().stats());
    }

    #[test]
    fn sos2_section_written_and_read() {
        let mut m = MipModel::new("s");
        let a = m.add_variable(VarSpec::sos2_member("a")).unwrap();
        let b = m.add_variable(VarSpec::sos2_member("b")).unwrap();
        m.add_sos2("g", vec![a, b], vec![rat(0), rat(1)]).unwrap();
        let text = export_mps(&m);
        assert!(text.contains(" S2 "));
        let back = import_mps(&text).unwrap();
        assert_eq!(back.sos2_groups().len(), 1);
        assert_eq!(back.stats(), m.stats());
    }

    #[test]
    fn long_names_are_mangled_without_collision() {
        let mut m = MipModel::new("t");
        let a = m.add_variable(VarSpec::nonneg("averylongvariablename[k1]")).unwrap();
        let b = m.add_variable(VarSpec::nonneg("V0")).unwrap(); // potential collision target
        m.add_constraint(vec![(a, rat(1)), (b, rat(1))], Sense::Le, rat(1), "c").unwrap();
        let (text, names) = export_mps_with_names(&m);
        assert_ne!(names.var_to_mps[0], names.var_to_mps[1]);
        let back = import_mps(&text).unwrap();
        assert_eq!(back.stats(), m.stats());
    }

    #[test]
    fn round_trip_preserves_stats_with_binaries_and_bounds() {
        let mut m = MipModel::new("rt");
        let x = m.add_variable(VarSpec::continuous("x", Some(ratio(-7, 2)), Some(rat(9)))).unwrap();
        let f = m.add_variable(VarSpec::continuous("f", None, None)).unwrap();
        let bvar = m.add_variable(VarSpec::binary("b")).unwrap();
        m.add_constraint(vec![(x, ratio(1, 3)), (bvar, rat(2))], Sense::Ge, ratio(5, 4), "g").unwrap();
        m.add_constraint(vec![(f, rat(1)), (x, rat(-1))], Sense::Eq, rat(0), "e").unwrap();
        m.objective.constant = rat(3);
        m.set_objective_term(x, rat(2));
        let back = import_mps(&export_mps(&m)).unwrap();
        let (s0, s1) = (m.stats(), back.stats());
        assert_eq!(s0.n_constraints, s1.n_constraints);
        assert_eq!(s0.n_continuous + s0.n_binary, s1.n_continuous + s1.n_binary);
        assert_eq!(s0.n_nonzeros, s1.n_nonzeros);
        assert_eq!(s0.n_binary, s1.n_binary);
        assert_eq!(back.objective.constant, rat(3));
    }
}

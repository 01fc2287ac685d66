//! Exact vertex enumeration of bounded polyhedra.
//!
//! Converts an H-representation (inequalities + equalities over exact
//! rationals, typically from an LP relaxation) to its complete vertex list
//! with the double description method, and computes fractional-coordinate
//! statistics over marked "binary-origin" coordinates. A brute-force
//! active-set enumerator serves as an independent oracle on small instances.

use crate::mip::{MipModel, Sense};
use crate::rat::{rat, Rat};
use num::{One, Signed, Zero};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("polyhedron is unbounded; recession direction: {0:?}")]
    Unbounded(Vec<String>),
    #[error("polyhedron is not pointed (contains a line)")]
    NotPointed,
    #[error("ray budget {0} exceeded during enumeration")]
    BudgetExceeded(usize),
    #[error("dimension mismatch in input rows")]
    DimensionMismatch,
    #[error("ieq parse error at line {0}: {1}")]
    IeqParse(usize, String),
}

/// H-representation: `{x : ineq_a x <= ineq_b, eq_a x = eq_b}`.
#[derive(Debug, Clone, Default)]
pub struct HPolyhedron {
    pub dim: usize,
    /// coordinate labels, `x1..xn` if not provided
    pub names: Vec<String>,
    pub ineqs: Vec<(Vec<Rat>, Rat)>,
    pub eqs: Vec<(Vec<Rat>, Rat)>,
}

impl HPolyhedron {
    pub fn new(dim: usize) -> Self {
        HPolyhedron {
            dim,
            names: (1..=dim).map(|i| format!("x{i}")).collect(),
            ..Default::default()
        }
    }

    pub fn add_le(&mut self, a: Vec<Rat>, b: Rat) {
        debug_assert_eq!(a.len(), self.dim);
        self.ineqs.push((a, b));
    }

    pub fn add_eq(&mut self, a: Vec<Rat>, b: Rat) {
        debug_assert_eq!(a.len(), self.dim);
        self.eqs.push((a, b));
    }

    /// Build from the LP relaxation of a model: variable bounds become
    /// inequality rows, constraints map by sense. Binaries are relaxed.
    pub fn from_model(model: &MipModel) -> Self {
        let model = model.relax();
        let dim = model.n_vars();
        let mut h = HPolyhedron::new(dim);
        h.names = model.variables().map(|(_, v)| v.name.clone()).collect();
        for (id, v) in model.variables() {
            if let Some(lo) = &v.lower {
                let mut a = vec![Rat::zero(); dim];
                a[id.index()] = rat(-1);
                h.add_le(a, -lo.clone());
            }
            if let Some(up) = &v.upper {
                let mut a = vec![Rat::zero(); dim];
                a[id.index()] = rat(1);
                h.add_le(a, up.clone());
            }
        }
        for c in model.constraints() {
            let mut a = vec![Rat::zero(); dim];
            for (v, coeff) in &c.terms {
                a[v.index()] = coeff.clone();
            }
            match c.sense {
                Sense::Le => h.add_le(a, c.rhs.clone()),
                Sense::Ge => h.add_le(a.iter().map(|x| -x).collect(), -c.rhs.clone()),
                Sense::Eq => h.add_eq(a, c.rhs.clone()),
            }
        }
        h
    }

    /// Exact membership test.
    pub fn contains(&self, x: &[Rat]) -> bool {
        self.ineqs.iter().all(|(a, b)| dot(a, x) <= *b) && self.eqs.iter().all(|(a, b)| dot(a, x) == *b)
    }

    /// Serialize in a PORTA-style `.ieq` text format:
    ///
    /// ```text
    /// DIM = 3
    /// INEQUALITIES_SECTION
    /// ( 1) +2x1 -3/2x2 <= 4
    /// ( 2) +1x1 +1x3 == 1
    /// END
    /// ```
    pub fn to_ieq(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "DIM = {}", self.dim);
        let _ = writeln!(s, "INEQUALITIES_SECTION");
        let mut idx = 0;
        let mut row = |s: &mut String, a: &[Rat], op: &str, b: &Rat| {
            idx += 1;
            let _ = write!(s, "( {idx}) ");
            let mut any = false;
            for (i, c) in a.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                any = true;
                let sign = if c.is_negative() { '-' } else { '+' };
                let m = c.abs();
                let _ = write!(s, "{sign}{m}x{} ", i + 1);
            }
            if !any {
                let _ = write!(s, "+0x1 ");
            }
            let _ = writeln!(s, "{op} {b}");
        };
        for (a, b) in &self.eqs {
            row(&mut s, a, "==", b);
        }
        for (a, b) in &self.ineqs {
            row(&mut s, a, "<=", b);
        }
        s.push_str("END\n");
        s
    }

    /// Parse the `.ieq` format written by [`Self::to_ieq`].
    pub fn from_ieq(text: &str) -> Result<Self, PolytopeError> {
        let mut dim = None;
        let mut h = HPolyhedron::default();
        let mut in_section = false;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let line_no = ln + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("DIM") {
                let d: usize = rest
                    .trim_start_matches([' ', '='])
                    .trim()
                    .parse()
                    .map_err(|_| PolytopeError::IeqParse(line_no, "bad DIM".into()))?;
                dim = Some(d);
                h = HPolyhedron::new(d);
                continue;
            }
            if line == "INEQUALITIES_SECTION" {
                in_section = true;
                continue;
            }
            if line == "END" {
                break;
            }
            if !in_section {
                continue;
            }
            let d = dim.ok_or_else(|| PolytopeError::IeqParse(line_no, "DIM missing".into()))?;
            // strip "( k)" prefix
            let body = match line.find(')') {
                Some(p) if line.starts_with('(') => line[p + 1..].trim(),
                _ => line,
            };
            let (lhs, op, rhs) = if let Some((l, r)) = body.split_once("<=") {
                (l, Sense::Le, r)
            } else if let Some((l, r)) = body.split_once("==") {
                (l, Sense::Eq, r)
            } else if let Some((l, r)) = body.split_once(">=") {
                (l, Sense::Ge, r)
            } else {
                return Err(PolytopeError::IeqParse(line_no, "missing relation".into()));
            };
            let b = parse_rat(rhs.trim()).ok_or_else(|| PolytopeError::IeqParse(line_no, "bad rhs".into()))?;
            let mut a = vec![Rat::zero(); d];
            for term in lhs.split_whitespace() {
                let (coeff_s, var_s) = term
                    .split_once('x')
                    .ok_or_else(|| PolytopeError::IeqParse(line_no, format!("bad term `{term}`")))?;
                let idx: usize = var_s
                    .parse()
                    .map_err(|_| PolytopeError::IeqParse(line_no, format!("bad index `{var_s}`")))?;
                if idx == 0 || idx > d {
                    return Err(PolytopeError::IeqParse(line_no, format!("index out of range `{term}`")));
                }
                let cs = match coeff_s {
                    "+" | "" => "1".to_string(),
                    "-" => "-1".to_string(),
                    other => other.to_string(),
                };
                let c = parse_rat(&cs).ok_or_else(|| PolytopeError::IeqParse(line_no, format!("bad coeff `{term}`")))?;
                a[idx - 1] += c;
            }
            match op {
                Sense::Le => h.add_le(a, b),
                Sense::Ge => h.add_le(a.iter().map(|x| -x).collect(), -b),
                Sense::Eq => h.add_eq(a, b),
            }
        }
        if dim.is_none() {
            return Err(PolytopeError::IeqParse(0, "DIM missing".into()));
        }
        Ok(h)
    }
}

fn parse_rat(s: &str) -> Option<Rat> {
    if let Some((n, d)) = s.split_once('/') {
        let num = crate::rat::parse_decimal(n.trim())?;
        let den = crate::rat::parse_decimal(d.trim())?;
        if den.is_zero() {
            return None;
        }
        Some(num / den)
    } else {
        crate::rat::parse_decimal(s)
    }
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact rational matrix rank (Gaussian elimination).
fn rank(m: &[Vec<Rat>]) -> usize {
    if m.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<Rat>> = m.to_vec();
    let cols = m[0].len();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = &m[i][c] / &m[r][c];
                let row_r = m[r].clone();
                for (a, b) in m[i].iter_mut().zip(&row_r) {
                    *a -= &f * b;
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Invert a square rational matrix; `None` if singular.
fn invert(m: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let n = m.len();
    let mut aug: Vec<Vec<Rat>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !aug[i][c].is_zero())?;
        aug.swap(c, p);
        let piv = aug[c][c].clone();
        for v in aug[c].iter_mut() {
            *v /= &piv;
        }
        for i in 0..n {
            if i != c && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                let row_c = aug[c].clone();
                for (a, b) in aug[i].iter_mut().zip(&row_c) {
                    *a -= &f * b;
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Solve `A x = b` (general, possibly rectangular): particular solution and
/// nullspace basis, or `None` if inconsistent.
fn solve_affine(a: &[Vec<Rat>], b: &[Rat], dim: usize) -> Option<(Vec<Rat>, Vec<Vec<Rat>>)> {
    let mut rows: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(r, v)| {
            let mut row = r.clone();
            row.push(v.clone());
            row
        })
        .collect();
    let mut piv: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..dim {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let pivv = rows[r][c].clone();
        for v in rows[r].iter_mut() {
            *v /= &pivv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                let row_r = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&row_r) {
                    *x -= &f * y;
                }
            }
        }
        piv.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    for row in rows.iter().skip(r) {
        if !row[dim].is_zero() {
            return None;
        }
    }
    let mut xp = vec![Rat::zero(); dim];
    for (i, &c) in piv.iter().enumerate() {
        xp[c] = rows[i][dim].clone();
    }
    let free: Vec<usize> = (0..dim).filter(|c| !piv.contains(c)).collect();
    let mut null = Vec::with_capacity(free.len());
    for fc in free {
        let mut col = vec![Rat::zero(); dim];
        col[fc] = Rat::one();
        for (i, &c) in piv.iter().enumerate() {
            col[c] = -rows[i][fc].clone();
        }
        null.push(col);
    }
    Some((xp, null))
}

/// Complete vertex list of a bounded polyhedron.
#[derive(Debug, Clone, Default)]
pub struct VertexSet {
    pub points: Vec<Vec<Rat>>,
}

impl VertexSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Fraction statistics over marked coordinates: share of vertices with any
/// marked coordinate strictly between integers, and the average number of
/// fractional marked coordinates over the fractional vertices (0 if none).
pub fn fractional_stats(v: &VertexSet, marked: &[usize]) -> (f64, f64) {
    if v.points.is_empty() {
        return (0.0, 0.0);
    }
    let mut frac_vertices = 0usize;
    let mut frac_coords = 0usize;
    for p in &v.points {
        let c = marked.iter().filter(|&&i| !crate::rat::is_zero_or_one(&p[i])).count();
        if c > 0 {
            frac_vertices += 1;
            frac_coords += c;
        }
    }
    let pct = 100.0 * frac_vertices as f64 / v.points.len() as f64;
    let avg = if frac_vertices == 0 { 0.0 } else { frac_coords as f64 / frac_vertices as f64 };
    (pct, avg)
}

fn normalize(ray: &[Rat]) -> Vec<Rat> {
    let Some(nz) = ray.iter().find(|v| !v.is_zero()) else { return ray.to_vec() };
    let s = nz.abs();
    ray.iter().map(|v| v / &s).collect()
}

/// Double-description enumeration of `{y : G y <= h}` (full-dimensional
/// coordinates, no equalities). Returns vertex list in the reduced space.
fn dd_reduced(g: &[Vec<Rat>], h: &[Rat], dim: usize, budget: usize) -> Result<Vec<Vec<Rat>>, PolytopeError> {
    // homogenize: rows [h_i, -g_i] . (x0, y) >= 0, plus x0 >= 0 appended
    let mut rows: Vec<Vec<Rat>> = g
        .iter()
        .zip(h)
        .map(|(gi, hi)| {
            let mut r = vec![hi.clone()];
            r.extend(gi.iter().map(|v| -v));
            r
        })
        .collect();
    let mut x0row = vec![Rat::zero(); dim + 1];
    x0row[0] = Rat::one();
    rows.push(x0row);
    let d = dim + 1;

    // initial simplicial cone from d linearly independent rows
    let mut idx: Vec<usize> = Vec::new();
    let mut basis: Vec<Vec<Rat>> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        basis.push(row.clone());
        if rank(&basis) > idx.len() {
            idx.push(i);
        } else {
            basis.pop();
        }
        if idx.len() == d {
            break;
        }
    }
    if idx.len() < d {
        return Err(PolytopeError::NotPointed);
    }
    let inv = invert(&basis).expect("independent rows invert");
    // rays are the columns of the inverse; each carries its set of active
    // (tight) processed rows for the adjacency tests
    let mut processed: Vec<usize> = idx.clone();
    let mut rays: Vec<(Vec<Rat>, HashSet<usize>)> = (0..d)
        .map(|j| {
            let r = normalize(&(0..d).map(|i| inv[i][j].clone()).collect::<Vec<_>>());
            let act = processed.iter().copied().filter(|&k| dot(&rows[k], &r).is_zero()).collect();
            (r, act)
        })
        .collect();

    for i in 0..rows.len() {
        if processed.contains(&i) {
            continue;
        }
        let row = &rows[i];
        let vals: Vec<Rat> = rays.iter().map(|(r, _)| dot(row, r)).collect();
        processed.push(i);
        if vals.iter().all(|v| !v.is_negative()) {
            for (k, v) in vals.iter().enumerate() {
                if v.is_zero() {
                    rays[k].1.insert(i);
                }
            }
            continue;
        }
        let mut pos: Vec<(usize, &Rat)> = Vec::new();
        let mut neg: Vec<(usize, &Rat)> = Vec::new();
        let mut keep: Vec<(Vec<Rat>, HashSet<usize>)> = Vec::new();
        for (k, v) in vals.iter().enumerate() {
            if v.is_positive() {
                pos.push((k, v));
            } else if v.is_zero() {
                let mut kept = rays[k].clone();
                kept.1.insert(i);
                keep.push(kept);
            } else {
                neg.push((k, v));
            }
        }
        for &(kp, vp) in &pos {
            for &(kn, vn) in &neg {
                let common: Vec<Vec<Rat>> = rays[kp]
                    .1
                    .intersection(&rays[kn].1)
                    .map(|&j| rows[j].clone())
                    .collect();
                let adjacent = if common.is_empty() { d == 2 } else { rank(&common) == d - 2 };
                if adjacent {
                    let comb: Vec<Rat> = rays[kp]
                        .0
                        .iter()
                        .zip(&rays[kn].0)
                        .map(|(a, b)| vp * b - vn * a)
                        .collect();
                    let r = normalize(&comb);
                    // exact active set of the new ray (degeneracy-safe)
                    let act: HashSet<usize> =
                        processed.iter().copied().filter(|&k| dot(&rows[k], &r).is_zero()).collect();
                    keep.push((r, act));
                }
            }
        }
        for &(kp, _) in &pos {
            keep.push(rays[kp].clone());
        }
        // dedupe
        let mut seen: HashSet<String> = HashSet::new();
        rays = keep
            .into_iter()
            .filter(|(r, _)| seen.insert(format!("{r:?}")))
            .collect();
        if rays.len() > budget {
            return Err(PolytopeError::BudgetExceeded(budget));
        }
    }

    let mut verts = Vec::new();
    let mut recession: Option<Vec<Rat>> = None;
    for (r, _) in &rays {
        if r[0].is_positive() {
            verts.push(r[1..].iter().map(|v| v / &r[0]).collect::<Vec<_>>());
        } else if r[0].is_zero() && r.iter().any(|v| !v.is_zero()) {
            recession = Some(r[1..].to_vec());
        }
    }
    if verts.is_empty() {
        return Ok(Vec::new()); // empty polyhedron
    }
    if let Some(dir) = recession {
        return Err(PolytopeError::Unbounded(dir.iter().map(|v| v.to_string()).collect()));
    }
    let mut seen: HashSet<String> = HashSet::new();
    Ok(verts.into_iter().filter(|v| seen.insert(format!("{v:?}"))).collect())
}

/// Enumerate all vertices of the polyhedron with the double description
/// method. Equalities are eliminated by exact substitution first. Errors on
/// unbounded input (naming a recession direction) or when the intermediate
/// ray count exceeds `budget`.
pub fn enumerate_vertices(h: &HPolyhedron, budget: usize) -> Result<VertexSet, PolytopeError> {
    for (a, _) in h.ineqs.iter().chain(&h.eqs) {
        if a.len() != h.dim {
            return Err(PolytopeError::DimensionMismatch);
        }
    }
    let (xp, null) = match solve_affine(
        &h.eqs.iter().map(|(a, _)| a.clone()).collect::<Vec<_>>(),
        &h.eqs.iter().map(|(_, b)| b.clone()).collect::<Vec<_>>(),
        h.dim,
    ) {
        Some(v) => v,
        None => return Ok(VertexSet::default()), // inconsistent equalities
    };
    let tdim = null.len();
    if tdim == 0 {
        // unique candidate point
        let ok = h.ineqs.iter().all(|(a, b)| dot(a, &xp) <= *b);
        return Ok(VertexSet { points: if ok { vec![xp] } else { vec![] } });
    }
    // project inequalities into the reduced coordinates y: x = xp + N y
    let mut g = Vec::with_capacity(h.ineqs.len());
    let mut rhs = Vec::with_capacity(h.ineqs.len());
    for (a, b) in &h.ineqs {
        g.push(null.iter().map(|col| dot(a, col)).collect::<Vec<_>>());
        rhs.push(b - dot(a, &xp));
    }
    let verts_y = dd_reduced(&g, &rhs, tdim, budget)?;
    let points = verts_y
        .into_iter()
        .map(|y| {
            (0..h.dim)
                .map(|i| &xp[i] + y.iter().zip(&null).map(|(yj, col)| yj * &col[i]).sum::<Rat>())
                .collect()
        })
        .collect();
    Ok(VertexSet { points })
}

/// Brute-force vertex oracle: solve every maximal active set of rows
/// (dimension-many inequalities at equality, all equalities), keep feasible
/// solutions, dedupe. Exponential; for cross-checking small instances only.
pub fn enumerate_vertices_brute(h: &HPolyhedron) -> Result<VertexSet, PolytopeError> {
    let (xp, null) = match solve_affine(
        &h.eqs.iter().map(|(a, _)| a.clone()).collect::<Vec<_>>(),
        &h.eqs.iter().map(|(_, b)| b.clone()).collect::<Vec<_>>(),
        h.dim,
    ) {
        Some(v) => v,
        None => return Ok(VertexSet::default()),
    };
    let tdim = null.len();
    let mut g = Vec::new();
    let mut rhs = Vec::new();
    for (a, b) in &h.ineqs {
        g.push(null.iter().map(|col| dot(a, col)).collect::<Vec<_>>());
        rhs.push(b - dot(a, &xp));
    }
    let n = g.len();
    let mut points: Vec<Vec<Rat>> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut combo: Vec<usize> = (0..tdim).collect();
    if tdim == 0 || n < tdim {
        let ok = (0..n).all(|i| dot(&g[i], &vec![Rat::zero(); tdim]) <= rhs[i]);
        return Ok(VertexSet {
            points: if ok && tdim == 0 { vec![xp] } else { vec![] },
        });
    }
    loop {
        let a: Vec<Vec<Rat>> = combo.iter().map(|&i| g[i].clone()).collect();
        let b: Vec<Rat> = combo.iter().map(|&i| rhs[i].clone()).collect();
        if rank(&a) == tdim {
            if let Some((y, null2)) = solve_affine(&a, &b, tdim) {
                if null2.is_empty() && (0..n).all(|i| dot(&g[i], &y) <= rhs[i]) {
                    let x: Vec<Rat> = (0..h.dim)
                        .map(|i| &xp[i] + y.iter().zip(&null).map(|(yj, col)| yj * &col[i]).sum::<Rat>())
                        .collect();
                    if seen.insert(format!("{x:?}")) {
                        points.push(x);
                    }
                }
            }
        }
        // next combination
        let mut k = tdim;
        loop {
            if k == 0 {
                return Ok(VertexSet { points });
            }
            k -= 1;
            if combo[k] != k + n - tdim {
                combo[k] += 1;
                for j in k + 1..tdim {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

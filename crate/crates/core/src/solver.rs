//! Built-in LP/MILP solver and external-solver adapter.
//!
//! The LP core is a dense bounded-variable two-phase revised simplex with a
//! Bland anti-cycling fallback. MILPs are solved by best-first branch and
//! bound: binaries branch on the most fractional variable (pseudo-cost
//! tiebreak), SOS2 groups branch by splitting the member range at the
//! weighted middle. The external adapter exchanges MPS/solution files with
//! any command-line solver following the documented protocol.

use crate::mip::{export_mps_with_names, MipModel, Sense, VarKind};
use crate::rat::to_f64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write as _;
use std::time::{Duration, Instant};
use thiserror::Error;

const FEAS_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
/// Iterations of Dantzig pricing before switching to Bland's rule.
const BLAND_AFTER: usize = 20_000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("iteration limit reached in simplex")]
    IterationLimit,
    #[error("external solver failed: {0}")]
    External(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of an LP solve. `x` is indexed by model variable; `duals` by
/// constraint row (convention: reduced cost `c_j - y . a_j` is nonnegative
/// for variables at lower bound at a minimum).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node or time limit hit; `objective`/`x` hold the incumbent if any.
    LimitReached,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub objective: Option<f64>,
    pub x: Option<Vec<f64>>,
    /// Best proven lower bound (minimization).
    pub bound: f64,
    /// Relative gap between incumbent and bound, if an incumbent exists.
    pub gap: Option<f64>,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct MilpConfig {
    /// Stop when (incumbent - bound) / max(1, |incumbent|) drops below this.
    pub rel_gap: f64,
    /// Distance from the nearest integer below which a binary counts integral.
    pub integrality_tol: f64,
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
}

impl Default for MilpConfig {
    fn default() -> Self {
        MilpConfig {
            rel_gap: 1e-3,
            integrality_tol: 1e-6,
            node_limit: None,
            time_limit: None,
        }
    }
}

/// Model data lowered to f64 arrays (columns, bounds, costs).
struct NumModel {
    n: usize,
    m: usize,
    /// per-row sparse (col, coeff) over structural variables
    rows: Vec<Vec<(usize, f64)>>,
    senses: Vec<Sense>,
    rhs: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    cost_const: f64,
    binaries: Vec<usize>,
    sos2: Vec<(Vec<usize>, Vec<f64>)>,
}

impl NumModel {
    fn from_model(model: &MipModel) -> Self {
        let n = model.n_vars();
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut up = vec![f64::INFINITY; n];
        let mut binaries = Vec::new();
        for (id, v) in model.variables() {
            if let Some(l) = &v.lower {
                lo[id.index()] = to_f64(l);
            }
            if let Some(u) = &v.upper {
                up[id.index()] = to_f64(u);
            }
            if v.kind == VarKind::Binary {
                binaries.push(id.index());
            }
        }
        let mut cost = vec![0.0; n];
        for (v, a) in &model.objective.terms {
            cost[v.index()] += to_f64(a);
        }
        let rows: Vec<Vec<(usize, f64)>> = model
            .constraints()
            .iter()
            .map(|c| c.terms.iter().map(|(v, a)| (v.index(), to_f64(a))).collect())
            .collect();
        NumModel {
            n,
            m: rows.len(),
            rows,
            senses: model.constraints().iter().map(|c| c.sense).collect(),
            rhs: model.constraints().iter().map(|c| to_f64(&c.rhs)).collect(),
            lo,
            up,
            cost,
            cost_const: to_f64(&model.objective.constant),
            binaries,
            sos2: model
                .sos2_groups()
                .iter()
                .map(|g| {
                    (
                        g.members.iter().map(|v| v.index()).collect(),
                        g.weights.iter().map(to_f64).collect(),
                    )
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Free nonbasic, held at zero.
    FreeZero,
}

/// Bounded-variable revised simplex over `min c x : A x + s = b, l <= x <= u`.
struct Simplex {
    m: usize,
    ncols: usize,
    cols: Vec<Vec<f64>>,
    lo: Vec<f64>,
    up: Vec<f64>,
    binv: Vec<Vec<f64>>,
    basis: Vec<usize>,
    status: Vec<VStatus>,
    x: Vec<f64>,
    iterations: usize,
}

enum StepResult {
    Optimal,
    Unbounded,
}

impl Simplex {
    /// Build the standard form with one slack per row and artificials where
    /// the slack cannot absorb the initial residual. Returns the simplex
    /// plus phase-1 costs (empty if already feasible) and the index of the
    /// first artificial column.
    fn setup(nm: &NumModel, lo: &[f64], up: &[f64]) -> (Simplex, bool, usize) {
        let n = nm.n;
        let m = nm.m;
        let mut cols: Vec<Vec<f64>> = vec![vec![0.0; m]; n];
        for (i, row) in nm.rows.iter().enumerate() {
            for &(j, a) in row {
                cols[j][i] += a;
            }
        }
        let mut lov = lo.to_vec();
        let mut upv = up.to_vec();
        // slack bounds encode the sense
        for (i, s) in nm.senses.iter().enumerate() {
            let mut col = vec![0.0; m];
            col[i] = 1.0;
            cols.push(col);
            match s {
                Sense::Le => {
                    lov.push(0.0);
                    upv.push(f64::INFINITY);
                }
                Sense::Ge => {
                    lov.push(f64::NEG_INFINITY);
                    upv.push(0.0);
                }
                Sense::Eq => {
                    lov.push(0.0);
                    upv.push(0.0);
                }
            }
        }
        // nonbasic starting point: nearest finite bound, else zero
        let mut x = vec![0.0; n + m];
        let mut status = vec![VStatus::FreeZero; n + m];
        for j in 0..n {
            if lov[j].is_finite() {
                x[j] = lov[j];
                status[j] = VStatus::AtLower;
            } else if upv[j].is_finite() {
                x[j] = upv[j];
                status[j] = VStatus::AtUpper;
            }
        }
        // residuals the slacks must carry
        let mut resid = nm.rhs.clone();
        for (i, row) in nm.rows.iter().enumerate() {
            for &(j, a) in row {
                resid[i] -= a * x[j];
            }
        }
        let mut basis = Vec::with_capacity(m);
        let mut binv_diag = Vec::with_capacity(m);
        let mut need_artificial = false;
        let first_artificial = n + m;
        let mut art_cols: Vec<(usize, f64)> = Vec::new();
        for i in 0..m {
            let s = n + i;
            let clamped = resid[i].clamp(lov[s], upv[s]);
            if (clamped - resid[i]).abs() <= FEAS_TOL {
                x[s] = resid[i];
                status[s] = VStatus::Basic;
                basis.push(s);
                binv_diag.push(1.0);
            } else {
                // slack parks at the nearest bound, artificial takes the rest
                x[s] = clamped;
                status[s] = if clamped == lov[s] { VStatus::AtLower } else { VStatus::AtUpper };
                let sign = (resid[i] - clamped).signum();
                art_cols.push((i, sign));
                need_artificial = true;
                let a = first_artificial + art_cols.len() - 1;
                x.push((resid[i] - clamped).abs());
                status.push(VStatus::Basic);
                basis.push(a);
                binv_diag.push(sign);
            }
        }
        for &(i, sign) in &art_cols {
            let mut col = vec![0.0; m];
            col[i] = sign;
            cols.push(col);
            lov.push(0.0);
            upv.push(f64::INFINITY);
        }
        let mut binv = vec![vec![0.0; m]; m];
        for i in 0..m {
            binv[i][i] = binv_diag[i];
        }
        let ncols = cols.len();
        (
            Simplex { m, ncols, cols, lo: lov, up: upv, binv, basis, status, x, iterations: 0 },
            need_artificial,
            first_artificial,
        )
    }

    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (k, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                for i in 0..self.m {
                    y[i] += c * self.binv[k][i];
                }
            }
        }
        y
    }

    fn ftran(&self, col: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.m];
        for (i, wi) in w.iter_mut().enumerate() {
            let row = &self.binv[i];
            let mut acc = 0.0;
            for (k, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    acc += row[k] * v;
                }
            }
            *wi = acc;
        }
        w
    }

    /// Run the simplex to optimality for the given costs.
    fn optimize(&mut self, cost: &[f64], max_iters: usize) -> Result<StepResult, SolverError> {
        loop {
            if self.iterations >= max_iters {
                return Err(SolverError::IterationLimit);
            }
            self.iterations += 1;
            let bland = self.iterations > BLAND_AFTER;
            let cb: Vec<f64> = self.basis.iter().map(|&j| cost.get(j).copied().unwrap_or(0.0)).collect();
            let y = self.btran(&cb);
            // pricing
            let mut entering: Option<(usize, f64, f64)> = None; // (col, |d|, dir)
            for j in 0..self.ncols {
                let st = self.status[j];
                if st == VStatus::Basic {
                    continue;
                }
                if self.lo[j] == self.up[j] && st != VStatus::FreeZero {
                    continue; // fixed variable can never move
                }
                let cj = cost.get(j).copied().unwrap_or(0.0);
                let d = cj - self.cols[j].iter().zip(&y).map(|(a, yi)| a * yi).sum::<f64>();
                let dir = match st {
                    VStatus::AtLower if d < -COST_TOL => 1.0,
                    VStatus::AtUpper if d > COST_TOL => -1.0,
                    VStatus::FreeZero if d < -COST_TOL => 1.0,
                    VStatus::FreeZero if d > COST_TOL => -1.0,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, d.abs(), dir));
                    break;
                }
                if entering.as_ref().is_none_or(|&(_, best, _)| d.abs() > best) {
                    entering = Some((j, d.abs(), dir));
                }
            }
            let Some((q, _, dir)) = entering else {
                return Ok(StepResult::Optimal);
            };
            let w = self.ftran(&self.cols[q]);
            // ratio test: basics hitting a bound, or the entering variable
            // flipping to its other bound
            let mut t = if self.lo[q].is_finite() && self.up[q].is_finite() {
                self.up[q] - self.lo[q]
            } else {
                f64::INFINITY
            };
            let mut leaving: Option<(usize, f64)> = None; // (row, pivot)
            for i in 0..self.m {
                let g = dir * w[i];
                let bj = self.basis[i];
                let lim = if g > FEAS_TOL {
                    if self.lo[bj].is_finite() {
                        (self.x[bj] - self.lo[bj]).max(0.0) / g
                    } else {
                        f64::INFINITY
                    }
                } else if g < -FEAS_TOL {
                    if self.up[bj].is_finite() {
                        (self.up[bj] - self.x[bj]).max(0.0) / (-g)
                    } else {
                        f64::INFINITY
                    }
                } else {
                    continue;
                };
                let better = lim < t - FEAS_TOL
                    || (lim < t + FEAS_TOL
                        && leaving.as_ref().is_some_and(|&(r, p)| {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                w[i].abs() > p.abs()
                            }
                        }));
                if better {
                    t = lim.max(0.0).min(t);
                    leaving = Some((i, w[i]));
                }
            }
            if t.is_infinite() {
                return Ok(StepResult::Unbounded);
            }
            // move the entering variable and update basic values
            for i in 0..self.m {
                self.x[self.basis[i]] -= dir * t * w[i];
            }
            self.x[q] += dir * t;
            match leaving {
                None => {
                    // bound flip, basis unchanged
                    self.status[q] = match self.status[q] {
                        VStatus::AtLower => VStatus::AtUpper,
                        VStatus::AtUpper => VStatus::AtLower,
                        other => other,
                    };
                    self.x[q] = if self.status[q] == VStatus::AtUpper { self.up[q] } else { self.lo[q] };
                }
                Some((r, piv)) => {
                    let lv = self.basis[r];
                    // snap the leaving variable exactly onto its bound
                    if dir * piv > 0.0 {
                        self.status[lv] = VStatus::AtLower;
                        self.x[lv] = self.lo[lv];
                    } else {
                        self.status[lv] = VStatus::AtUpper;
                        self.x[lv] = self.up[lv];
                    }
                    self.basis[r] = q;
                    self.status[q] = VStatus::Basic;
                    // product-form update of the basis inverse
                    let wr = piv;
                    let row_r: Vec<f64> = self.binv[r].iter().map(|v| v / wr).collect();
                    for i in 0..self.m {
                        if i != r && w[i] != 0.0 {
                            let f = w[i];
                            for k in 0..self.m {
                                self.binv[i][k] -= f * row_r[k];
                            }
                        }
                    }
                    self.binv[r] = row_r;
                }
            }
        }
    }
}

/// Solve the LP relaxation of `model` (binaries relaxed, SOS2 dropped).
pub fn solve_lp(model: &MipModel) -> Result<LpSolution, SolverError> {
    let nm = NumModel::from_model(&model.relax());
    solve_lp_numeric(&nm, &nm.lo, &nm.up)
}

fn solve_lp_numeric(nm: &NumModel, lo: &[f64], up: &[f64]) -> Result<LpSolution, SolverError> {
    for j in 0..nm.n {
        if lo[j] > up[j] {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::INFINITY,
                x: vec![0.0; nm.n],
                duals: vec![0.0; nm.m],
                iterations: 0,
            });
        }
    }
    let (mut sx, need_phase1, first_art) = Simplex::setup(nm, lo, up);
    let max_iters = 200 * (sx.ncols + sx.m) + 10_000;
    if need_phase1 {
        let mut c1 = vec![0.0; sx.ncols];
        for c in c1.iter_mut().skip(first_art) {
            *c = 1.0;
        }
        match sx.optimize(&c1, max_iters)? {
            StepResult::Unbounded => unreachable!("phase-1 objective is bounded below by zero"),
            StepResult::Optimal => {}
        }
        let infeas: f64 = (first_art..sx.ncols).map(|j| sx.x[j]).sum();
        if infeas > 1e-7 {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::INFINITY,
                x: sx.x[..nm.n].to_vec(),
                duals: vec![0.0; nm.m],
                iterations: sx.iterations,
            });
        }
        // pin artificials at zero for phase 2
        for j in first_art..sx.ncols {
            sx.lo[j] = 0.0;
            sx.up[j] = 0.0;
            if sx.status[j] != VStatus::Basic {
                sx.status[j] = VStatus::AtLower;
                sx.x[j] = 0.0;
            }
        }
    }
    let mut c2 = vec![0.0; sx.ncols];
    c2[..nm.n].copy_from_slice(&nm.cost);
    let status = match sx.optimize(&c2, max_iters)? {
        StepResult::Optimal => LpStatus::Optimal,
        StepResult::Unbounded => LpStatus::Unbounded,
    };
    let cb: Vec<f64> = sx.basis.iter().map(|&j| c2[j]).collect();
    let duals = sx.btran(&cb);
    let x = sx.x[..nm.n].to_vec();
    let objective = if status == LpStatus::Unbounded {
        f64::NEG_INFINITY
    } else {
        nm.cost.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>() + nm.cost_const
    };
    Ok(LpSolution { status, objective, x, duals, iterations: sx.iterations })
}

/// Heap node ordered so the smallest LP bound pops first.
struct Node {
    bound: f64,
    overrides: Vec<(usize, f64, f64)>,
    depth: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the least bound first
        other.bound.total_cmp(&self.bound).then(other.depth.cmp(&self.depth))
    }
}

fn apply_overrides(nm: &NumModel, overrides: &[(usize, f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = nm.lo.clone();
    let mut up = nm.up.clone();
    for &(j, l, u) in overrides {
        lo[j] = lo[j].max(l);
        up[j] = up[j].min(u);
    }
    (lo, up)
}

/// First violated SOS2 group and its branch index, if any: more than two
/// nonzero members or two non-adjacent ones. The branch splits the member
/// range at the value-weighted middle, strictly inside the nonzero span.
fn sos2_violation(nm: &NumModel, x: &[f64], tol: f64) -> Option<(usize, usize)> {
    for (gi, (members, _)) in nm.sos2.iter().enumerate() {
        let nz: Vec<usize> = members
            .iter()
            .enumerate()
            .filter(|(_, &j)| x[j].abs() > tol)
            .map(|(k, _)| k)
            .collect();
        let ok = match nz.len() {
            0 | 1 => true,
            2 => nz[1] == nz[0] + 1,
            _ => false,
        };
        if ok {
            continue;
        }
        let total: f64 = nz.iter().map(|&k| x[members[k]]).sum();
        let center: f64 = nz.iter().map(|&k| k as f64 * x[members[k]]).sum::<f64>() / total;
        let (first, last) = (nz[0], *nz.last().unwrap());
        let r = (center.round() as usize).clamp(first + 1, last - 1);
        return Some((gi, r));
    }
    None
}

/// Branch-and-bound MILP solve (minimization).
pub fn solve_milp(model: &MipModel, cfg: &MilpConfig) -> Result<MilpSolution, SolverError> {
    let nm = NumModel::from_model(model);
    let start = Instant::now();
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, overrides: Vec::new(), depth: 0 });
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut best_bound = f64::NEG_INFINITY;
    // pseudo-costs per binary: (down cost, down count, up cost, up count)
    let mut pc: Vec<(f64, usize, f64, usize)> = vec![(0.0, 0, 0.0, 0); nm.n];
    let mut limit_hit = false;
    let mut root_unbounded = false;

    while let Some(node) = heap.pop() {
        // heap is ordered by bound: the popped node carries the global bound
        best_bound = node.bound;
        if let Some((inc, _)) = &incumbent {
            let gap = (inc - best_bound) / inc.abs().max(1.0);
            if gap <= cfg.rel_gap {
                break;
            }
            if node.bound >= *inc - 1e-9 {
                continue;
            }
        }
        if cfg.node_limit.is_some_and(|l| nodes >= l)
            || cfg.time_limit.is_some_and(|l| start.elapsed() >= l)
        {
            limit_hit = true;
            break;
        }
        nodes += 1;
        let (lo, up) = apply_overrides(&nm, &node.overrides);
        let sol = solve_lp_numeric(&nm, &lo, &up)?;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if node.depth == 0 {
                    root_unbounded = true;
                    break;
                }
                continue;
            }
            LpStatus::Optimal => {}
        }
        if let Some((inc, _)) = &incumbent {
            if sol.objective >= *inc - 1e-9 {
                continue;
            }
        }
        // pick a fractional binary: most fractional, pseudo-cost tiebreak
        let mut pick: Option<(usize, f64, f64)> = None; // (var, frac, score)
        for &j in &nm.binaries {
            let v = sol.x[j];
            let frac = (v - v.round()).abs();
            if frac <= cfg.integrality_tol {
                continue;
            }
            let infeas = v.fract().min(1.0 - v.fract());
            let (dc, dn, uc, un) = pc[j];
            let pscore = (dc / dn.max(1) as f64) * v.fract() + (uc / un.max(1) as f64) * (1.0 - v.fract());
            let score = infeas * 1e6 + pscore;
            if pick.as_ref().is_none_or(|&(_, _, s)| score > s) {
                pick = Some((j, v, score));
            }
        }
        if let Some((j, v, _)) = pick {
            let down = Node {
                bound: sol.objective,
                overrides: with_override(&node.overrides, (j, f64::NEG_INFINITY, v.floor())),
                depth: node.depth + 1,
            };
            let upn = Node {
                bound: sol.objective,
                overrides: with_override(&node.overrides, (j, v.ceil(), f64::INFINITY)),
                depth: node.depth + 1,
            };
            // cheap pseudo-cost update from the parent objective movement
            let f = v.fract();
            pc[j].0 += sol.objective.abs().max(1.0) * f;
            pc[j].1 += 1;
            pc[j].2 += sol.objective.abs().max(1.0) * (1.0 - f);
            pc[j].3 += 1;
            heap.push(down);
            heap.push(upn);
            continue;
        }
        if let Some((gi, r)) = sos2_violation(&nm, &sol.x, cfg.integrality_tol) {
            let members = &nm.sos2[gi].0;
            // left child keeps members [0..=r], right child [r..]
            let mut left = node.overrides.clone();
            for &mj in &members[r + 1..] {
                left = with_override(&left, (mj, 0.0, 0.0));
            }
            let mut right = node.overrides.clone();
            for &mj in &members[..r] {
                right = with_override(&right, (mj, 0.0, 0.0));
            }
            heap.push(Node { bound: sol.objective, overrides: left, depth: node.depth + 1 });
            heap.push(Node { bound: sol.objective, overrides: right, depth: node.depth + 1 });
            continue;
        }
        // integral and SOS2-feasible: new incumbent?
        if incumbent.as_ref().is_none_or(|(inc, _)| sol.objective < *inc) {
            incumbent = Some((sol.objective, sol.x.clone()));
        }
    }

    if root_unbounded {
        return Ok(MilpSolution {
            status: MilpStatus::Unbounded,
            objective: None,
            x: None,
            bound: f64::NEG_INFINITY,
            gap: None,
            nodes,
        });
    }
    let exhausted = heap.is_empty() && !limit_hit;
    match incumbent {
        Some((obj, x)) => {
            let bound = if exhausted { obj } else { best_bound.min(obj) };
            let gap = (obj - bound) / obj.abs().max(1.0);
            let status = if limit_hit && gap > cfg.rel_gap { MilpStatus::LimitReached } else { MilpStatus::Optimal };
            Ok(MilpSolution { status, objective: Some(obj), x: Some(x), bound, gap: Some(gap), nodes })
        }
        None => Ok(MilpSolution {
            status: if limit_hit { MilpStatus::LimitReached } else { MilpStatus::Infeasible },
            objective: None,
            x: None,
            bound: best_bound,
            gap: None,
            nodes,
        }),
    }
}

fn with_override(base: &[(usize, f64, f64)], add: (usize, f64, f64)) -> Vec<(usize, f64, f64)> {
    let mut v = base.to_vec();
    v.push(add);
    v
}

/// External solver invocation: `program args...` where the placeholders
/// `{input}` and `{output}` expand to the MPS file and the expected
/// solution file.
///
/// The solution file protocol is plain text:
///
/// ```text
/// status optimal        # or: infeasible, unbounded, limit
/// objective 12.5        # present when a solution exists
/// X1 0                  # one line per variable, MPS column name + value
/// X2 3.25
/// ```
#[derive(Debug, Clone)]
pub struct ExternalCommand {
    pub program: String,
    pub args: Vec<String>,
}

pub fn solve_external(model: &MipModel, cmd: &ExternalCommand) -> Result<MilpSolution, SolverError> {
    let dir = tempfile::tempdir()?;
    let input = dir.path().join("model.mps");
    let output = dir.path().join("solution.txt");
    let (mps, names) = export_mps_with_names(model);
    std::fs::File::create(&input)?.write_all(mps.as_bytes())?;
    let args: Vec<String> = cmd
        .args
        .iter()
        .map(|a| {
            a.replace("{input}", &input.to_string_lossy())
                .replace("{output}", &output.to_string_lossy())
        })
        .collect();
    let out = std::process::Command::new(&cmd.program).args(&args).output()?;
    if !out.status.success() {
        return Err(SolverError::External(format!(
            "`{}` exited with {}: {}",
            cmd.program,
            out.status,
            String::from_utf8_lossy(&out.stderr)
        )));
    }
    let text = std::fs::read_to_string(&output)
        .map_err(|e| SolverError::External(format!("solution file missing: {e}")))?;
    let mut status = None;
    let mut objective = None;
    let mut x = vec![0.0; model.n_vars()];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(key), Some(val)) = (it.next(), it.next()) else {
            continue;
        };
        match key {
            "status" => {
                status = Some(match val {
                    "optimal" => MilpStatus::Optimal,
                    "infeasible" => MilpStatus::Infeasible,
                    "unbounded" => MilpStatus::Unbounded,
                    "limit" => MilpStatus::LimitReached,
                    other => return Err(SolverError::External(format!("unknown status `{other}`"))),
                })
            }
            "objective" => {
                objective = Some(
                    val.parse::<f64>()
                        .map_err(|_| SolverError::External(format!("bad objective `{val}`")))?,
                )
            }
            name => {
                if let Some(id) = names.mps_to_var.get(name) {
                    x[id.index()] = val
                        .parse::<f64>()
                        .map_err(|_| SolverError::External(format!("bad value for `{name}`")))?;
                }
            }
        }
    }
    let status = status.ok_or_else(|| SolverError::External("solution file has no status line".into()))?;
    let has_sol = objective.is_some() && status != MilpStatus::Infeasible && status != MilpStatus::Unbounded;
    Ok(MilpSolution {
        status,
        objective,
        x: if has_sol { Some(x) } else { None },
        bound: objective.unwrap_or(f64::NEG_INFINITY),
        gap: if has_sol { Some(0.0) } else { None },
        nodes: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::{MipModel, VarSpec};
    use crate::rat::{rat, ratio, Rat};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-7 * (1.0 + b.abs())
    }

    #[test]
    fn lp_two_variable_known_optimum() {
        // min -x - 2y : x + y <= 4, x <= 3, y <= 2 -> (2,2), obj -6
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::continuous("x", Some(rat(0)), Some(rat(3)))).unwrap();
        let y = m.add_variable(VarSpec::continuous("y", Some(rat(0)), Some(rat(2)))).unwrap();
        m.add_constraint(vec![(x, rat(1)), (y, rat(1))], Sense::Le, rat(4), "cap").unwrap();
        m.set_objective_term(x, rat(-1));
        m.set_objective_term(y, rat(-2));
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.objective, -6.0), "{}", s.objective);
        assert!(close(s.x[0], 2.0) && close(s.x[1], 2.0));
    }

    #[test]
    fn lp_equality_and_free_variable() {
        // min x : x - y = 3, y >= -1, x free -> x = 2 at y = -1
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::continuous("x", None, None)).unwrap();
        let y = m.add_variable(VarSpec::continuous("y", Some(rat(-1)), None)).unwrap();
        m.add_constraint(vec![(x, rat(1)), (y, rat(-1))], Sense::Eq, rat(3), "link").unwrap();
        m.set_objective_term(x, rat(1));
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.objective, 2.0), "{}", s.objective);
    }

    #[test]
    fn lp_infeasible_detected() {
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::continuous("x", Some(rat(0)), Some(rat(1)))).unwrap();
        m.add_constraint(vec![(x, rat(1))], Sense::Ge, rat(2), "c").unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn lp_unbounded_detected() {
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::nonneg("x")).unwrap();
        m.set_objective_term(x, rat(-1));
        m.add_constraint(vec![(x, rat(-1))], Sense::Le, rat(0), "c").unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn lp_duals_price_binding_row() {
        // min -x : x <= 5 (row) -> dual of the row is -1
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::nonneg("x")).unwrap();
        m.add_constraint(vec![(x, rat(1))], Sense::Le, rat(5), "cap").unwrap();
        m.set_objective_term(x, rat(-1));
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.x[0], 5.0));
        assert!(close(s.duals[0], -1.0), "{}", s.duals[0]);
    }

    #[test]
    fn lp_objective_constant_included() {
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::continuous("x", Some(rat(1)), Some(rat(2)))).unwrap();
        m.set_objective_term(x, rat(1));
        m.objective.constant = ratio(7, 2);
        let s = solve_lp(&m).unwrap();
        assert!(close(s.objective, 4.5), "{}", s.objective);
    }

    #[test]
    fn milp_knapsack_known_optimum() {
        // max 5a + 4b + 3c st 2a + 3b + c <= 4 (binary) -> a=c=1, value 8
        let mut m = MipModel::new("t");
        let a = m.add_variable(VarSpec::binary("a")).unwrap();
        let b = m.add_variable(VarSpec::binary("b")).unwrap();
        let c = m.add_variable(VarSpec::binary("c")).unwrap();
        m.add_constraint(vec![(a, rat(2)), (b, rat(3)), (c, rat(1))], Sense::Le, rat(4), "w").unwrap();
        m.set_objective_term(a, rat(-5));
        m.set_objective_term(b, rat(-4));
        m.set_objective_term(c, rat(-3));
        let s = solve_milp(&m, &MilpConfig { rel_gap: 0.0, ..Default::default() }).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!(close(s.objective.unwrap(), -8.0));
        let x = s.x.unwrap();
        assert!(close(x[0], 1.0) && close(x[1], 0.0) && close(x[2], 1.0));
    }

    #[test]
    fn milp_infeasible_detected() {
        let mut m = MipModel::new("t");
        let a = m.add_variable(VarSpec::binary("a")).unwrap();
        let b = m.add_variable(VarSpec::binary("b")).unwrap();
        m.add_constraint(vec![(a, rat(1)), (b, rat(1))], Sense::Ge, ratio(3, 2), "c1").unwrap();
        m.add_constraint(vec![(a, rat(1)), (b, rat(1))], Sense::Le, ratio(3, 2), "c2").unwrap();
        m.add_constraint(vec![(a, rat(1)), (b, rat(-1))], Sense::Eq, rat(0), "c3").unwrap();
        let s = solve_milp(&m, &MilpConfig::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Infeasible);
    }

    #[test]
    fn milp_node_limit_reports_limit() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut m = MipModel::new("t");
        let vars: Vec<_> = (0..14).map(|i| m.add_variable(VarSpec::binary(format!("b{i}"))).unwrap()).collect();
        let terms: Vec<_> = vars.iter().map(|&v| (v, rat(rng.gen_range(3..20)))).collect();
        m.add_constraint(terms.clone(), Sense::Le, rat(60), "w").unwrap();
        for &(v, ref c) in &terms {
            m.set_objective_term(v, -c.clone() - ratio(1, 7));
        }
        let s = solve_milp(&m, &MilpConfig { rel_gap: 0.0, node_limit: Some(2), ..Default::default() }).unwrap();
        assert_eq!(s.status, MilpStatus::LimitReached);
    }

    /// Exhaustive MILP oracle over the binaries: fix every 0/1 pattern and
    /// solve the remaining LP.
    fn brute_force_milp(m: &MipModel) -> Option<f64> {
        let bins: Vec<_> = m
            .variables()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(id, _)| id)
            .collect();
        let mut best: Option<f64> = None;
        for mask in 0..(1u32 << bins.len()) {
            let mut fixed = m.clone();
            let mut fm = MipModel::new("fixed");
            for (id, v) in m.variables() {
                let (lo, up) = if let Some(k) = bins.iter().position(|&b| b == id) {
                    let bit = rat(((mask >> k) & 1) as i64);
                    (Some(bit.clone()), Some(bit))
                } else {
                    (v.lower.clone(), v.upper.clone())
                };
                fm.add_variable(VarSpec::continuous(v.name.clone(), lo, up)).unwrap();
            }
            for c in m.constraints() {
                fm.add_constraint(c.terms.clone(), c.sense, c.rhs.clone(), c.tag.clone()).unwrap();
            }
            fm.objective = m.objective.clone();
            fixed.name.clear(); // silence unused warning path
            let s = solve_lp(&fm).unwrap();
            if s.status == LpStatus::Optimal && best.is_none_or(|b| s.objective < b) {
                best = Some(s.objective);
            }
        }
        best
    }

    #[test]
    fn milp_matches_brute_force_on_random_models() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for case in 0..25 {
            let nb = rng.gen_range(2..=6);
            let nc = rng.gen_range(0..=2);
            let mut m = MipModel::new("t");
            let mut vars = Vec::new();
            for i in 0..nb {
                vars.push(m.add_variable(VarSpec::binary(format!("b{i}"))).unwrap());
            }
            for i in 0..nc {
                vars.push(
                    m.add_variable(VarSpec::continuous(format!("x{i}"), Some(rat(0)), Some(rat(5)))).unwrap(),
                );
            }
            for r in 0..rng.gen_range(1..=4) {
                let mut terms: Vec<(crate::mip::VarId, Rat)> = Vec::new();
                for &v in &vars {
                    if rng.gen_bool(0.8) {
                        let c = rat(rng.gen_range(-4..=4));
                        if !num::Zero::is_zero(&c) {
                            terms.push((v, c));
                        }
                    }
                }
                if terms.is_empty() {
                    continue;
                }
                let sense = [Sense::Le, Sense::Ge][rng.gen_range(0..2)];
                m.add_constraint(terms, sense, rat(rng.gen_range(-3..=6)), format!("c{r}")).unwrap();
            }
            for &v in &vars {
                m.set_objective_term(v, rat(rng.gen_range(-5..=5)));
            }
            let bb = solve_milp(&m, &MilpConfig { rel_gap: 0.0, ..Default::default() }).unwrap();
            let bf = brute_force_milp(&m);
            match bf {
                None => assert_eq!(bb.status, MilpStatus::Infeasible, "case {case}"),
                Some(opt) => {
                    assert_eq!(bb.status, MilpStatus::Optimal, "case {case}");
                    assert!(close(bb.objective.unwrap(), opt), "case {case}: {} vs {opt}", bb.objective.unwrap());
                    // reported solution must actually attain the objective
                    let x = bb.x.as_ref().unwrap();
                    let recomputed: f64 = m
                        .objective
                        .terms
                        .iter()
                        .map(|(v, c)| crate::rat::to_f64(c) * x[v.index()])
                        .sum();
                    assert!(close(recomputed, opt), "case {case}");
                }
            }
        }
    }

    #[test]
    fn milp_sos2_branching_enforces_adjacency() {
        // pick weights on breakpoints 0,1,2,3 of a convex-violating profile:
        // LP relaxation mixes the outer points; SOS2 forces one segment.
        let mut m = MipModel::new("t");
        let w: Vec<_> = (0..4)
            .map(|i| {
                let mut s = VarSpec::sos2_member(format!("w{i}"));
                s.upper = Some(rat(1));
                m.add_variable(s).unwrap()
            })
            .collect();
        m.add_constraint(w.iter().map(|&v| (v, rat(1))).collect(), Sense::Eq, rat(1), "convex").unwrap();
        // x = sum z_i w_i with z = (0,1,2,3); require x = 3/2
        let terms: Vec<_> = w.iter().enumerate().map(|(i, &v)| (v, rat(i as i64))).collect();
        m.add_constraint(terms, Sense::Eq, ratio(3, 2), "pos").unwrap();
        m.add_sos2("g", w.clone(), vec![rat(0), rat(1), rat(2), rat(3)]).unwrap();
        // objective rewards the outer points, so the relaxation violates SOS2
        m.set_objective_term(w[0], rat(-1));
        m.set_objective_term(w[3], rat(-1));
        let s = solve_milp(&m, &MilpConfig { rel_gap: 0.0, ..Default::default() }).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        let x = s.x.unwrap();
        let nz: Vec<usize> = (0..4).filter(|&i| x[i].abs() > 1e-6).collect();
        assert!(nz.len() <= 2 && nz.windows(2).all(|p| p[1] == p[0] + 1), "{x:?}");
        // x = 3/2 forces the middle segment: w1 = w2 = 1/2, objective 0
        assert!(close(s.objective.unwrap(), 0.0));
    }

    #[test]
    fn external_adapter_round_trips_through_script() {
        // stub solver: reads nothing, writes a fixed solution for this model
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::continuous("x", Some(rat(0)), Some(rat(3)))).unwrap();
        m.set_objective_term(x, rat(-1));
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("stub.sh");
        std::fs::write(
            &script,
            "#!/bin/sh\nprintf 'status optimal\\nobjective -3\\nx 3\\n' > \"$1\"\n",
        )
        .unwrap();
        let cmd = ExternalCommand {
            program: "sh".into(),
            args: vec![script.to_string_lossy().into_owned(), "{output}".into()],
        };
        let s = solve_external(&m, &cmd).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!(close(s.objective.unwrap(), -3.0));
        assert!(close(s.x.unwrap()[x.index()], 3.0));
    }

    #[test]
    fn lp_degenerate_ties_terminate() {
        // many redundant rows through the same vertex
        let mut m = MipModel::new("t");
        let x = m.add_variable(VarSpec::nonneg("x")).unwrap();
        let y = m.add_variable(VarSpec::nonneg("y")).unwrap();
        for k in 1..=6 {
            m.add_constraint(vec![(x, rat(k)), (y, rat(k))], Sense::Le, rat(2 * k), "c").unwrap();
        }
        m.set_objective_term(x, rat(-1));
        m.set_objective_term(y, rat(-1));
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.objective, -2.0), "{}", s.objective);
    }
}

//! `linegas`: build and solve integrated power-gas dispatch MILPs.
//!
//! Subcommands: `precompute` (cut-table cache), `solve` (dispatch run with
//! report and solution CSVs), `tightness` (relaxed-polytope vertex
//! statistics for one pipeline), `quality` (exact vs linearized flow CSV)
//! and `benchmark` (method comparison with speed-up ratios).
//!
//! Exit codes: 0 success, 2 infeasible, 3 a limit or budget was hit,
//! 4 configuration error (bad flags, unreadable or invalid inputs).
//!
//! The external solver command comes from the `LINEGAS_SOLVER_CMD`
//! environment variable, a shell-free template such as
//! `python3 tools/solve_mps.py {input} {output}`.

use clap::{Parser, Subcommand, ValueEnum};
use linegas::builder::{build, default_method, default_z_grid, MethodChoice, MethodKind};
use linegas::instance::{parse_instance, Instance};
use linegas::linsep::{SepMethod, UnionGrid};
use linegas::linz::ZConfig;
use linegas::mip::MipModel;
use linegas::polytope::{enumerate_vertices, fractional_stats, HPolyhedron, PolytopeError};
use linegas::rat::{to_f64, Rat};
use linegas::solver::{solve_external, solve_milp, ExternalCommand, MilpConfig, MilpSolution, MilpStatus};
use linegas::ztables::{compute_z_tables, ZParams};
use num::{One, Signed};
use serde::Serialize;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

const EXIT_OK: i32 = 0;
const EXIT_INFEASIBLE: i32 = 2;
const EXIT_LIMIT: i32 = 3;
const EXIT_CONFIG: i32 = 4;

#[derive(Parser)]
#[command(name = "linegas", version, about = "Integrated power-gas dispatch MILP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Inc,
    Sos2,
    Z,
}

impl From<MethodArg> for MethodKind {
    fn from(m: MethodArg) -> MethodKind {
        match m {
            MethodArg::Inc => MethodKind::Inc,
            MethodArg::Sos2 => MethodKind::Sos2,
            MethodArg::Z => MethodKind::Z,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Internal,
    External,
}

#[derive(Subcommand)]
enum Command {
    /// Precompute and cache per-pipeline cut tables for the z method.
    Precompute {
        instance: PathBuf,
        #[arg(long, default_value_t = 5)]
        segments: usize,
        /// Cache directory; files are keyed by pipeline id and grid hash.
        #[arg(long, default_value = "zcache")]
        out: PathBuf,
        /// Suppress timings for byte-stable output.
        #[arg(long)]
        deterministic: bool,
    },
    /// Build and solve a dispatch case; write a report and solution CSVs.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "z")]
        method: MethodArg,
        #[arg(long, default_value_t = 5)]
        segments: usize,
        /// Relative MIP gap at which to stop.
        #[arg(long, default_value_t = 1e-3)]
        gap: f64,
        /// Truncate the instance to its first K periods.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum, default_value = "internal")]
        solver: SolverArg,
        #[arg(long)]
        node_limit: Option<usize>,
        /// Wall-clock limit in seconds (internal solver).
        #[arg(long)]
        time_limit: Option<f64>,
        /// Directory for the report and CSV outputs.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Reuse cut tables cached by `precompute`.
        #[arg(long)]
        zcache: Option<PathBuf>,
        /// Suppress timings for byte-stable output.
        #[arg(long)]
        deterministic: bool,
    },
    /// Vertex statistics of one pipeline's relaxed linearization polytope.
    Tightness {
        instance: PathBuf,
        #[arg(long)]
        pipeline: String,
        #[arg(long, value_enum, default_value = "z")]
        method: MethodArg,
        #[arg(long, default_value_t = 3)]
        segments: usize,
        /// Abort enumeration past this many intermediate rays.
        #[arg(long, default_value_t = 2_000_000)]
        budget: usize,
    },
    /// CSV comparing exact and linearized flow over pressure states.
    Quality {
        instance: PathBuf,
        #[arg(long)]
        pipeline: String,
        #[arg(long, default_value_t = 5)]
        segments: usize,
        /// Number of pressure-gradient sample points.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve each instance under all three methods and report speed-ups.
    Benchmark {
        instances: Vec<PathBuf>,
        #[arg(long, default_value_t = 3)]
        segments: usize,
        #[arg(long, default_value_t = 1e-3)]
        gap: f64,
        #[arg(long)]
        node_limit: Option<usize>,
        /// Omit wall times and speed-ups for byte-stable output.
        #[arg(long)]
        deterministic: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
    };
    std::process::exit(code);
}

fn run(cmd: Command) -> Result<i32, String> {
    match cmd {
        Command::Precompute { instance, segments, out, deterministic } => {
            cmd_precompute(&instance, segments, &out, deterministic)
        }
        Command::Solve {
            instance,
            method,
            segments,
            gap,
            horizon,
            solver,
            node_limit,
            time_limit,
            out,
            zcache,
            deterministic,
        } => cmd_solve(
            &instance, method, segments, gap, horizon, solver, node_limit, time_limit, &out,
            zcache.as_deref(), deterministic,
        ),
        Command::Tightness { instance, pipeline, method, segments, budget } => {
            cmd_tightness(&instance, &pipeline, method, segments, budget)
        }
        Command::Quality { instance, pipeline, segments, samples, out } => {
            cmd_quality(&instance, &pipeline, segments, samples, out.as_deref())
        }
        Command::Benchmark { instances, segments, gap, node_limit, deterministic } => {
            cmd_benchmark(&instances, segments, gap, node_limit, deterministic)
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_instance(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Truncate all time series to the first `k` periods.
fn truncate_horizon(inst: &mut Instance, k: usize) -> Result<(), String> {
    if k == 0 || k > inst.horizon {
        return Err(format!("--horizon must be in 1..={}", inst.horizon));
    }
    inst.horizon = k;
    for series in inst
        .demand_electric
        .values_mut()
        .chain(inst.demand_gas.values_mut())
        .chain(inst.capacity_factors.values_mut())
    {
        series.truncate(k);
    }
    Ok(())
}

fn cache_file(dir: &Path, pipeline: &str, hash: u64) -> PathBuf {
    dir.join(format!("{pipeline}-{hash:016x}.json"))
}

fn cmd_precompute(path: &Path, segments: usize, out: &Path, deterministic: bool) -> Result<i32, String> {
    let inst = load_instance(path)?;
    if inst.pipelines.is_empty() {
        return Err("instance has no pipelines".into());
    }
    std::fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    for l in &inst.pipelines {
        let grid = default_z_grid(&inst, l, segments).map_err(|e| e.to_string())?;
        let file = cache_file(out, &l.id, grid.content_hash());
        if file.exists() {
            match ZParams::load(&file, &grid) {
                Ok(_) => {
                    println!("{}: cache hit ({})", l.id, file.display());
                    continue;
                }
                Err(e) => eprintln!("warning: {}: corrupted cache, rebuilding ({e})", l.id),
            }
        }
        let t = Instant::now();
        let zp = compute_z_tables(&grid);
        zp.save(&file).map_err(|e| format!("{}: {e}", file.display()))?;
        if deterministic {
            println!("{}: computed {} tuples", l.id, zp.tuples.len());
        } else {
            println!("{}: computed {} tuples in {:.2?}", l.id, zp.tuples.len(), t.elapsed());
        }
    }
    Ok(EXIT_OK)
}

/// Build the method data, reusing a `precompute` cache for the z method.
fn make_method(
    inst: &Instance,
    kind: MethodKind,
    segments: usize,
    zcache: Option<&Path>,
) -> Result<MethodChoice, String> {
    if kind == MethodKind::Z {
        if let Some(dir) = zcache {
            let mut grids = HashMap::new();
            let mut params = HashMap::new();
            for l in &inst.pipelines {
                let grid = default_z_grid(inst, l, segments).map_err(|e| e.to_string())?;
                let file = cache_file(dir, &l.id, grid.content_hash());
                let zp = match ZParams::load(&file, &grid) {
                    Ok(zp) => zp,
                    Err(_) => compute_z_tables(&grid),
                };
                params.insert(l.id.clone(), zp);
                grids.insert(l.id.clone(), grid);
            }
            return Ok(MethodChoice::Z { grids, params, config: ZConfig::default() });
        }
    }
    default_method(inst, kind, segments).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct RunReport {
    instance: String,
    method: &'static str,
    status: String,
    objective: Option<f64>,
    bound: f64,
    gap: Option<f64>,
    nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_seconds: Option<f64>,
    /// Sum of linepack over all pipelines and periods.
    total_linepack: f64,
    /// Total production per gas source over the horizon.
    gas_production: Vec<(String, f64)>,
    /// Total generation per unit over the horizon.
    generation: Vec<(String, f64)>,
    non_supplied_electricity: f64,
    non_supplied_gas: f64,
}

fn solution_value(model: &MipModel, x: &[f64], name: &str) -> f64 {
    model.var_by_name(name).map(|v| x[v.index()]).unwrap_or(0.0)
}

/// Data-range diagnostic for infeasible cases: the balances always admit
/// non-supply slack, so infeasibility stems from pipeline physics. Reports
/// the first pipeline whose initial linepack cannot be met within the
/// endpoint pressure bounds.
fn infeasibility_hint(inst: &Instance) -> Option<String> {
    let half = Rat::one() / linegas::rat::rat(2);
    for l in &inst.pipelines {
        let m = inst.node(&l.from)?;
        let n = inst.node(&l.to)?;
        let lo = &l.lp_factor * (&m.p_min + &n.p_min) * &half;
        let hi = &l.lp_factor * (&m.p_max + &n.p_max) * &half;
        if l.lp_init < lo || l.lp_init > hi {
            return Some(format!(
                "pipeline `{}`: initial linepack {} outside the reachable range [{}, {}]",
                l.id,
                to_f64(&l.lp_init),
                to_f64(&lo),
                to_f64(&hi)
            ));
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    path: &Path,
    method: MethodArg,
    segments: usize,
    gap: f64,
    horizon: Option<usize>,
    solver: SolverArg,
    node_limit: Option<usize>,
    time_limit: Option<f64>,
    out: &Path,
    zcache: Option<&Path>,
    deterministic: bool,
) -> Result<i32, String> {
    let mut inst = load_instance(path)?;
    if let Some(k) = horizon {
        truncate_horizon(&mut inst, k)?;
    }
    let kind: MethodKind = method.into();
    let choice = make_method(&inst, kind, segments, zcache)?;
    let model = build(&inst, &choice).map_err(|e| e.to_string())?;

    let t = Instant::now();
    let sol = match solver {
        SolverArg::Internal => {
            let cfg = MilpConfig {
                rel_gap: gap,
                node_limit,
                time_limit: time_limit.map(Duration::from_secs_f64),
                ..Default::default()
            };
            solve_milp(&model, &cfg).map_err(|e| e.to_string())?
        }
        SolverArg::External => {
            let cmd = external_command()?;
            solve_external(&model, &cmd).map_err(|e| e.to_string())?
        }
    };
    let wall = t.elapsed().as_secs_f64();

    match sol.status {
        MilpStatus::Infeasible => {
            eprintln!("infeasible: no dispatch satisfies the model");
            if let Some(hint) = infeasibility_hint(&inst) {
                eprintln!("hint: {hint}");
            }
            return Ok(EXIT_INFEASIBLE);
        }
        MilpStatus::Unbounded => return Err("model unbounded (corrupt instance?)".into()),
        MilpStatus::LimitReached if sol.x.is_none() => {
            eprintln!("limit reached with no incumbent (nodes: {})", sol.nodes);
            return Ok(EXIT_LIMIT);
        }
        _ => {}
    }
    let x = sol.x.as_ref().expect("checked above");

    std::fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    write_solution_csvs(out, &inst, &model, x)?;
    let report = build_report(&inst, &model, kind, &sol, x, (!deterministic).then_some(wall));
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(out.join("report.json"), &json).map_err(|e| e.to_string())?;
    println!("{json}");
    Ok(if sol.status == MilpStatus::LimitReached { EXIT_LIMIT } else { EXIT_OK })
}

fn external_command() -> Result<ExternalCommand, String> {
    let raw = std::env::var("LINEGAS_SOLVER_CMD")
        .unwrap_or_else(|_| "python3 tools/solve_mps.py {input} {output}".into());
    let mut parts = raw.split_whitespace().map(String::from);
    let program = parts.next().ok_or("LINEGAS_SOLVER_CMD is empty")?;
    Ok(ExternalCommand { program, args: parts.collect() })
}

fn build_report(
    inst: &Instance,
    model: &MipModel,
    kind: MethodKind,
    sol: &MilpSolution,
    x: &[f64],
    wall_seconds: Option<f64>,
) -> RunReport {
    let mut total_linepack = 0.0;
    for k in 1..=inst.horizon {
        for l in &inst.pipelines {
            total_linepack += solution_value(model, x, &format!("lp[{k},{}]", l.id));
        }
    }
    let gas_production = inst
        .sources
        .iter()
        .map(|s| {
            let v = (1..=inst.horizon).map(|k| solution_value(model, x, &format!("pG[{k},{}]", s.id))).sum();
            (s.id.clone(), v)
        })
        .collect();
    let generation = inst
        .generators
        .iter()
        .map(|g| {
            let v = (1..=inst.horizon).map(|k| solution_value(model, x, &format!("pE[{k},{}]", g.id))).sum();
            (g.id.clone(), v)
        })
        .collect();
    let non_supplied_electricity = inst
        .buses
        .iter()
        .flat_map(|b| (1..=inst.horizon).map(move |k| format!("nsE[{k},{b}]")))
        .map(|n| solution_value(model, x, &n))
        .sum();
    let non_supplied_gas = inst
        .nodes
        .iter()
        .flat_map(|n| (1..=inst.horizon).map(move |k| format!("nsG[{k},{}]", n.id)))
        .map(|n| solution_value(model, x, &n))
        .sum();
    RunReport {
        instance: inst.name.clone(),
        method: match kind {
            MethodKind::Inc => "inc",
            MethodKind::Sos2 => "sos2",
            MethodKind::Z => "z",
        },
        status: format!("{:?}", sol.status).to_lowercase(),
        objective: sol.objective,
        bound: sol.bound,
        gap: sol.gap,
        nodes: sol.nodes,
        wall_seconds,
        total_linepack,
        gas_production,
        generation,
        non_supplied_electricity,
        non_supplied_gas,
    }
}

fn write_solution_csvs(out: &Path, inst: &Instance, model: &MipModel, x: &[f64]) -> Result<(), String> {
    let w = |name: &str, body: String| -> Result<(), String> {
        std::fs::write(out.join(name), body).map_err(|e| format!("{name}: {e}"))
    };
    let mut dispatch = String::from("k,generator,output_mw,committed\n");
    for k in 1..=inst.horizon {
        for g in &inst.generators {
            let pe = solution_value(model, x, &format!("pE[{k},{}]", g.id));
            let u = model
                .var_by_name(&format!("on[{k},{}]", g.id))
                .map(|v| format!("{:.0}", x[v.index()]))
                .unwrap_or_default();
            dispatch.push_str(&format!("{k},{},{:.6},{}\n", g.id, pe, u));
        }
    }
    w("dispatch.csv", dispatch)?;

    let mut flows = String::from("k,pipeline,flow,flow_in,flow_out\n");
    for k in 1..=inst.horizon {
        for l in &inst.pipelines {
            flows.push_str(&format!(
                "{k},{},{:.6},{:.6},{:.6}\n",
                l.id,
                solution_value(model, x, &format!("f[{k},{}]", l.id)),
                solution_value(model, x, &format!("fIn[{k},{}]", l.id)),
                solution_value(model, x, &format!("fOut[{k},{}]", l.id)),
            ));
        }
    }
    w("flows.csv", flows)?;

    let mut pressures = String::from("k,node,pressure\n");
    for k in 1..=inst.horizon {
        for n in &inst.nodes {
            pressures.push_str(&format!(
                "{k},{},{:.6}\n",
                n.id,
                solution_value(model, x, &format!("pr[{k},{}]", n.id))
            ));
        }
    }
    w("pressures.csv", pressures)?;

    let mut linepack = String::from("k,pipeline,linepack\n");
    for k in 1..=inst.horizon {
        for l in &inst.pipelines {
            linepack.push_str(&format!(
                "{k},{},{:.6}\n",
                l.id,
                solution_value(model, x, &format!("lp[{k},{}]", l.id))
            ));
        }
    }
    w("linepack.csv", linepack)
}

fn cmd_tightness(
    path: &Path,
    pipeline: &str,
    method: MethodArg,
    segments: usize,
    budget: usize,
) -> Result<i32, String> {
    let inst = load_instance(path)?;
    let l = inst
        .pipelines
        .iter()
        .find(|l| l.id == pipeline)
        .ok_or_else(|| format!("no pipeline `{pipeline}` in {}", inst.name))?;
    let node = inst.node(&l.from).expect("validated instance");
    let model = match MethodKind::from(method) {
        MethodKind::Z => {
            let grid = default_z_grid(&inst, l, segments).map_err(|e| e.to_string())?;
            let zp = compute_z_tables(&grid);
            let p_min = to_f64(&node.p_min).round() as i64;
            let p_max = to_f64(&node.p_max).round() as i64;
            linegas::linz::single_pipeline_model(&grid, &zp, p_min, p_max, &ZConfig::default())
                .map_err(|e| e.to_string())?
                .0
        }
        kind => {
            let grid = UnionGrid::equidistant(&l.f_max, 2 * segments, &node.p_min, &node.p_max, segments)
                .map_err(|e| e.to_string())?;
            let sep = if kind == MethodKind::Inc { SepMethod::Inc } else { SepMethod::Sos2 };
            linegas::linsep::single_pipeline_model(&grid, &l.r, sep).map_err(|e| e.to_string())?
        }
    };
    let marked: Vec<usize> = model
        .variables()
        .filter(|(_, v)| v.kind == linegas::VarKind::Binary)
        .map(|(id, _)| id.index())
        .collect();
    let h = HPolyhedron::from_model(&model);
    let vertices = match enumerate_vertices(&h, budget) {
        Ok(v) => v,
        Err(PolytopeError::BudgetExceeded(n)) => {
            println!("cannot be computed: ray budget {n} exceeded");
            return Ok(EXIT_LIMIT);
        }
        Err(e) => return Err(e.to_string()),
    };
    let (pct, avg) = fractional_stats(&vertices, &marked);
    println!("pipeline: {pipeline}");
    println!("method: {}", ["inc", "sos2", "z"][method as usize]);
    println!("vertices: {}", vertices.points.len());
    println!("fractional_pct: {pct:.2}");
    println!("avg_fractional_binaries: {avg:.2}");
    Ok(EXIT_OK)
}

/// Piecewise-linear interpolation of `ys` over sorted `xs` at `x`, with
/// secant extrapolation of the boundary segments outside the grid range.
fn interp(xs: &[Rat], ys: &[Rat], x: &Rat) -> Rat {
    let n = xs.len();
    let mut i = n - 2;
    for j in 0..n - 1 {
        if *x <= xs[j + 1] {
            i = j;
            break;
        }
    }
    let t = (x - &xs[i]) / (&xs[i + 1] - &xs[i]);
    &ys[i] + t * (&ys[i + 1] - &ys[i])
}

/// Invert the piecewise-linear signed-square curve at `target >= 0`.
fn invert_flow_curve(flows: &[Rat], target: &Rat) -> Rat {
    let phi: Vec<Rat> = flows.iter().map(|f| f * f.abs()).collect();
    for i in 0..flows.len() - 1 {
        if *target >= phi[i] && *target <= phi[i + 1] {
            let t = (target - &phi[i]) / (&phi[i + 1] - &phi[i]);
            return &flows[i] + t * (&flows[i + 1] - &flows[i]);
        }
    }
    flows.last().expect("nonempty grid").clone()
}

fn cmd_quality(
    path: &Path,
    pipeline: &str,
    segments: usize,
    samples: usize,
    out: Option<&Path>,
) -> Result<i32, String> {
    let inst = load_instance(path)?;
    let l = inst
        .pipelines
        .iter()
        .find(|l| l.id == pipeline)
        .ok_or_else(|| format!("no pipeline `{pipeline}` in {}", inst.name))?;
    let node = inst.node(&l.from).expect("validated instance");
    let zgrid = default_z_grid(&inst, l, segments).map_err(|e| e.to_string())?;
    let ugrid = UnionGrid::equidistant(&l.f_max, 2 * segments, &node.p_min, &node.p_max, segments)
        .map_err(|e| e.to_string())?;
    let sq: Vec<Rat> = ugrid.pressure.iter().map(|p| p * p).collect();

    // states at the maximum pressure sum (the grid's reference, twice the
    // upper pressure bound) for each gradient
    let refsum = 2.0 * to_f64(&node.p_max);
    let dp_max = *zgrid.p.last().unwrap() as f64;
    let mut csv = String::from("pm,pn,dp,exact_flow,z_flow,sep_flow\n");
    for i in 0..=samples {
        let dp = dp_max * i as f64 / samples as f64;
        let (pm, pn) = ((refsum + dp) / 2.0, (refsum - dp) / 2.0);
        let exact = (to_f64(&l.r) * (pm * pm - pn * pn)).sqrt();
        let approx = |v: f64| linegas::rat::from_f64(v).expect("finite sample");
        let z_flow = zgrid.interpolate(&approx(dp)).map(|v| to_f64(&v)).unwrap_or(f64::NAN);
        let target =
            &l.r * (interp(&ugrid.pressure, &sq, &approx(pm)) - interp(&ugrid.pressure, &sq, &approx(pn)));
        let sep_flow = to_f64(&invert_flow_curve(&ugrid.flow, &target));
        csv.push_str(&format!("{pm:.4},{pn:.4},{dp:.4},{exact:.6},{z_flow:.6},{sep_flow:.6}\n"));
    }
    match out {
        Some(p) => std::fs::write(p, csv).map_err(|e| format!("{}: {e}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

fn cmd_benchmark(
    paths: &[PathBuf],
    segments: usize,
    gap: f64,
    node_limit: Option<usize>,
    deterministic: bool,
) -> Result<i32, String> {
    if paths.is_empty() {
        return Err("benchmark needs at least one instance".into());
    }
    let cfg = MilpConfig { rel_gap: gap, node_limit, ..Default::default() };
    let mut any_limit = false;
    println!("instance,method,status,objective,nodes{}", if deterministic { "" } else { ",seconds,speedup" });
    for path in paths {
        let inst = load_instance(path)?;
        let mut baseline: Option<f64> = None;
        for kind in [MethodKind::Inc, MethodKind::Sos2, MethodKind::Z] {
            let choice = default_method(&inst, kind, segments).map_err(|e| e.to_string())?;
            let model = build(&inst, &choice).map_err(|e| e.to_string())?;
            let t = Instant::now();
            let sol = solve_milp(&model, &cfg).map_err(|e| e.to_string())?;
            let secs = t.elapsed().as_secs_f64();
            if sol.status == MilpStatus::LimitReached {
                any_limit = true;
            }
            let name = ["inc", "sos2", "z"][kind as usize];
            let obj = sol.objective.map(|o| format!("{o:.4}")).unwrap_or_default();
            if deterministic {
                println!("{},{name},{:?},{obj},{}", inst.name, sol.status, sol.nodes);
            } else {
                // inc is the baseline the speed-up is measured against
                let speedup = baseline.map(|b| format!("{:.2}", b / secs)).unwrap_or_else(|| "1.00".into());
                baseline.get_or_insert(secs);
                println!("{},{name},{:?},{obj},{},{secs:.3},{speedup}", inst.name, sol.status, sol.nodes);
            }
        }
    }
    Ok(if any_limit { EXIT_LIMIT } else { EXIT_OK })
}

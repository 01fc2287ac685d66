//! Property tests for the toolkit's structural invariants.

use linegas::builder::{build, default_method, MethodKind};
use linegas::grid::generate_grid;
use linegas::instance::parse_instance;
use linegas::linsep::UnionGrid;
use linegas::mip::{import_mps, export_mps};
use linegas::polytope::{enumerate_vertices, HPolyhedron};
use linegas::rat::{parse_decimal, rat, ratio, to_decimal_string, to_f64};
use linegas::solver::{solve_milp, MilpConfig, MilpStatus};
use linegas::ztables::{compute_z_tables, compute_z_tables_literal};
use num::Zero;
use proptest::prelude::*;

proptest! {
    /// Generated grids are valid: origin start, strictly increasing flow and
    /// pressure values, and one point per segment boundary.
    #[test]
    fn generated_grids_are_valid(
        r in 50.0f64..800.0,
        dp_max in 10i64..40,
        refsum in 100i64..200,
        segments in 2usize..6,
    ) {
        prop_assume!(dp_max >= segments as i64);
        let grid = generate_grid(r, dp_max, refsum, segments, None).unwrap();
        prop_assert_eq!(grid.len(), segments + 1);
        prop_assert_eq!((grid.f[0], grid.p[0]), (0, 0));
        prop_assert!(grid.f.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(grid.p.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(*grid.p.last().unwrap(), dp_max);
    }

    /// The interpolant is monotone: values between adjacent grid points stay
    /// between the corresponding flow values.
    #[test]
    fn interpolant_stays_within_segment(
        seed in 0u64..1000,
        num in 1i64..100,
    ) {
        let grid = generate_grid(400.0 + seed as f64, 25, 136, 5, None).unwrap();
        let z = (seed % 5) as usize;
        let t = ratio(num, 100);
        let dp = rat(grid.p[z]) + &t * rat(grid.p[z + 1] - grid.p[z]);
        let v = grid.interpolate(&dp).unwrap();
        prop_assert!(rat(grid.f[z]) <= v && v <= rat(grid.f[z + 1]));
    }

    /// Decimal formatting round-trips exactly for terminating decimals.
    #[test]
    fn decimal_string_round_trips(n in -1_000_000i64..1_000_000, scale in 0u32..9) {
        let r = ratio(n, 10i64.pow(scale));
        prop_assert_eq!(parse_decimal(&to_decimal_string(&r)), Some(r));
    }

    /// The fast table computation agrees with the literal transcription on
    /// arbitrary small grids.
    #[test]
    fn tables_match_literal_oracle(incs in proptest::collection::vec((1i64..10, 1i64..10), 2..5)) {
        let mut f = vec![0i64];
        let mut p = vec![0i64];
        for (df, dp) in incs {
            f.push(f.last().unwrap() + df);
            p.push(p.last().unwrap() + dp);
        }
        let grid = linegas::grid::PiecewiseGrid::new(f, p).unwrap();
        prop_assert_eq!(compute_z_tables(&grid), compute_z_tables_literal(&grid));
    }

    /// MPS export/import round-trips model shape for decimal data.
    #[test]
    fn mps_round_trip_preserves_shape(
        n in 1usize..6,
        coeffs in proptest::collection::vec(-50i64..50, 1..6),
    ) {
        let mut m = linegas::MipModel::new("prop");
        let vars: Vec<_> = (0..n)
            .map(|i| {
                m.add_variable(linegas::mip::VarSpec::continuous(
                    format!("x{i}"),
                    Some(rat(0)),
                    Some(ratio(17, 2)),
                ))
                .unwrap()
            })
            .collect();
        // Fold the raw coefficients onto the variables so each variable
        // appears at most once (duplicate terms in one row are rejected).
        let mut folded = vec![0i64; n];
        for (i, &c) in coeffs.iter().enumerate() {
            folded[i % n] += c;
        }
        let terms: Vec<_> = folded
            .iter()
            .enumerate()
            .map(|(i, &c)| (vars[i], ratio(c, 4)))
            .filter(|(_, a)| !a.is_zero())
            .collect();
        prop_assume!(!terms.is_empty());
        m.add_constraint(terms, linegas::Sense::Le, rat(40), "row").unwrap();
        let back = import_mps(&export_mps(&m)).unwrap();
        prop_assert_eq!(back.stats(), m.stats());
    }

}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, .. ProptestConfig::default() })]

    /// Vertices returned by the enumerator satisfy every inequality.
    /// (Flow segments stay at 2 and the case count low: the union polytope's
    /// vertex count explodes combinatorially with finer flow grids.)
    #[test]
    fn enumerated_vertices_are_feasible(psegs in 1usize..3, f_max in 50i64..500) {
        let grid = UnionGrid::equidistant(&rat(f_max), 2, &rat(43), &rat(68), psegs).unwrap();
        let m = linegas::linsep::single_pipeline_model(&grid, &parse_decimal("379.82").unwrap(), linegas::linsep::SepMethod::Inc).unwrap();
        let h = HPolyhedron::from_model(&m);
        let vs = enumerate_vertices(&h, 5_000_000).unwrap();
        prop_assert!(!vs.points.is_empty());
        for v in &vs.points {
            prop_assert!(h.contains(v));
        }
    }

    /// Solved dispatch models satisfy the commitment identities, nonnegative
    /// linepack, and both nodal balances within solver tolerance, for
    /// arbitrary demand levels.
    #[test]
    fn dispatch_solutions_respect_balances(
        d1 in 0i64..500,
        d2 in 0i64..500,
        gas1 in 0i64..300,
        gas2 in 0i64..300,
    ) {
        let text = format!(
            "
[meta]
name = prop
horizon = 2
slack_bus = b1
[nodes]
n1 43 68
n2 43 68
[pipelines]
l1 n1 n2 379.82 1026.65 42.84 2356.2 1.0
[sources]
s1 n1 110 1500
[generators]
g1 thermal b1 n2 480 280 200 200 4 1.96 0
[buses]
b1
[demand_electric]
b1 {d1} {d2}
[demand_gas]
n2 {gas1} {gas2}
"
        );
        let inst = parse_instance(&text).unwrap();
        let model = build(&inst, &default_method(&inst, MethodKind::Z, 3).unwrap()).unwrap();
        let sol = solve_milp(&model, &MilpConfig::default()).unwrap();
        prop_assert_eq!(sol.status, MilpStatus::Optimal);
        let x = sol.x.unwrap();
        let at = |name: &str| x[model.var_by_name(name).unwrap().index()];
        for k in 1..=2 {
            // commitment logic: start - stop = on_k - on_{k-1}
            let u_prev = if k == 1 { 0.0 } else { at(&format!("on[{},g1]", k - 1)) };
            let logic = at(&format!("start[{k},g1]")) - at(&format!("stop[{k},g1]"))
                - (at(&format!("on[{k},g1]")) - u_prev);
            prop_assert!(logic.abs() < 1e-6);
            let lp = at(&format!("lp[{k},l1]"));
            prop_assert!(lp >= -1e-9);
            // power balance at the single bus
            let pe = at(&format!("pE[{k},g1]")) + at(&format!("nsE[{k},b1]"));
            let d = if k == 1 { d1 } else { d2 } as f64;
            prop_assert!((pe - d).abs() < 1e-6, "power balance at k={}: {} vs {}", k, pe, d);
            // gas balance at the demand node
            let inflow = at(&format!("fOut[{k},l1]")) + at(&format!("nsG[{k},n2]"))
                - at(&format!("gasUse[{k},g1]"));
            let dg = if k == 1 { gas1 } else { gas2 } as f64;
            prop_assert!((inflow - dg).abs() < 1e-6, "gas balance at k={}: {} vs {}", k, inflow, dg);
        }
    }
}

/// Independent audit of a solved case: re-evaluate every constraint row
/// from the model data and check the residuals directly.
#[test]
fn solved_case_passes_independent_residual_audit() {
    let inst = parse_instance(
        &std::fs::read_to_string(format!("{}/../../instances/syn1.txt", env!("CARGO_MANIFEST_DIR"))).unwrap(),
    )
    .unwrap();
    let model = build(&inst, &default_method(&inst, MethodKind::Z, 3).unwrap()).unwrap();
    let sol = solve_milp(&model, &MilpConfig { rel_gap: 0.0, ..Default::default() }).unwrap();
    let x = sol.x.unwrap();
    for c in model.constraints() {
        let lhs: f64 = c.terms.iter().map(|(v, a)| to_f64(a) * x[v.index()]).sum();
        let rhs = to_f64(&c.rhs);
        let ok = match c.sense {
            linegas::Sense::Le => lhs <= rhs + 1e-6,
            linegas::Sense::Ge => lhs >= rhs - 1e-6,
            linegas::Sense::Eq => (lhs - rhs).abs() <= 1e-6,
        };
        assert!(ok, "{}: lhs {lhs} vs rhs {rhs}", c.tag);
    }
}

use hypodist_lp::brute_force::{enumerate_vertices, satisfies};
use hypodist_lp::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random bounded LP built around a known feasible point.
fn random_lp(rng: &mut ChaCha8Rng, vars: usize, rows: usize) -> (LpModel, Vec<f64>) {
    let mut lp = LpModel::new();
    let x0: Vec<f64> = (0..vars).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let ids: Vec<VarId> = x0
        .iter()
        .map(|&v| {
            let lo = v - rng.gen_range(0.0..3.0);
            let hi = v + rng.gen_range(0.0..3.0);
            lp.add_variable(lo, hi, rng.gen_range(-5.0..5.0)).unwrap()
        })
        .collect();
    for _ in 0..rows {
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for &v in &ids {
            if rng.gen_bool(0.5) {
                terms.push((v, rng.gen_range(-4.0..4.0)));
            }
        }
        if terms.is_empty() {
            continue;
        }
        let act: f64 = terms.iter().map(|&(v, a)| a * x0[v.index()]).sum();
        match rng.gen_range(0..3) {
            0 => lp.add_constraint(terms, Relation::Le, act + rng.gen_range(0.0..2.0)),
            1 => lp.add_constraint(terms, Relation::Ge, act - rng.gen_range(0.0..2.0)),
            _ => lp.add_constraint(terms, Relation::Eq, act),
        }
        .unwrap();
    }
    (lp, x0)
}

#[test]
fn hundred_random_bounded_lps_reach_feasible_optima() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let vars = rng.gen_range(2..=50);
        let rows = rng.gen_range(1..=vars.min(40));
        let (lp, x0) = random_lp(&mut rng, vars, rows);
        let sol = solve(&lp).unwrap();
        assert!(sol.is_optimal(), "case {case}: {}", sol.status);
        assert!(lp.max_row_violation(&sol.values) <= 1e-9, "case {case}");
        assert!(lp.max_bound_violation(&sol.values) <= 1e-9, "case {case}");
        // Weak duality against feasible points: x0 and points between x0 and the optimum.
        for t in [0.0, 0.25, 0.5, 0.75] {
            let x: Vec<f64> = x0.iter().zip(&sol.values).map(|(a, b)| t * b + (1.0 - t) * a).collect();
            assert!(sol.objective <= lp.objective_value(&x) + 1e-7, "case {case}, t {t}");
        }
    }
}

#[test]
fn small_instances_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..60 {
        let vars = rng.gen_range(1..=5);
        let rows = rng.gen_range(1..=6);
        let (lp, _) = random_lp(&mut rng, vars, rows);
        let sol = solve(&lp).unwrap();
        let (best, x) = enumerate_vertices(&lp).expect("feasible by construction");
        assert!(satisfies(&lp, &x, 1e-9));
        assert!((sol.objective - best).abs() <= 1e-7 * (1.0 + best.abs()), "case {case}: {} vs {best}", sol.objective);
    }
}

#[test]
fn positive_objective_scaling_keeps_the_optimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let (lp, _) = random_lp(&mut rng, 12, 8);
        let mut scaled = lp.clone();
        for (j, v) in lp.variables().iter().enumerate() {
            scaled.set_cost(VarId::from_index(j), 4.0 * v.cost);
        }
        let a = solve(&lp).unwrap();
        let b = solve(&scaled).unwrap();
        assert_eq!(a.values, b.values);
        assert!((b.objective - 4.0 * a.objective).abs() <= 1e-9 * (1.0 + a.objective.abs()));
    }
}

#[test]
fn statuses_for_degenerate_models() {
    let mut lp = LpModel::new();
    let x = lp.add_variable(0.0, 1.0, 1.0).unwrap();
    lp.add_constraint([(x, 1.0)], Relation::Ge, 2.0).unwrap();
    assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);

    let mut lp = LpModel::new();
    let y = lp.add_variable(f64::NEG_INFINITY, f64::INFINITY, -1.0).unwrap();
    let z = lp.add_variable(0.0, f64::INFINITY, 0.0).unwrap();
    lp.add_constraint([(y, 1.0), (z, -1.0)], Relation::Le, 0.0).unwrap();
    assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);

    let empty = LpModel::new();
    let sol = solve(&empty).unwrap();
    assert!(sol.is_optimal() && sol.objective == 0.0);

    assert!(matches!(LpModel::new().add_variable(1.0, 0.0, 0.0), Err(LpError::InvalidBounds { .. })));
    assert!(LpModel::new().add_variable(0.0, 1.0, f64::NAN).is_err());
}

#[test]
fn export_lists_every_row() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (lp, _) = random_lp(&mut rng, 6, 5);
    let text = to_lp_string(&lp);
    assert!(text.starts_with("Minimize"));
    for i in 0..lp.num_rows() {
        assert!(text.contains(&format!("c{i}:")), "{text}");
    }
    assert!(text.trim_end().ends_with("End"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solution_is_feasible_and_no_worse_than_the_seed_point(seed in any::<u64>(), vars in 1usize..20, rows in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lp, x0) = random_lp(&mut rng, vars, rows);
        let sol = solve(&lp).unwrap();
        prop_assert!(sol.is_optimal());
        prop_assert!(satisfies(&lp, &sol.values, 1e-9));
        prop_assert!(sol.objective <= lp.objective_value(&x0) + 1e-7);
    }
}

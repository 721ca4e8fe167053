//! Forward-solver properties on random instances: exact duality,
//! complementary slackness, agreement with the vertex-minimum oracle,
//! monotone-plan optimality on Monge costs, and shift invariance of the
//! optimizer set.

use iot_core::forward::{
    check_primal_dual_optimal, is_monge, northwest_monotone_plan, shift, solve_forward,
};
use iot_core::polytope::{enumerate_extreme_points, EnumLimits};
use iot_core::rational::{rat_int, Rational};
use iot_core::types::{is_plan_for, Matrix};
use iot_testkit::oracles::{
    is_monge_all_quadruples, min_vertex_value, random_cost, random_marginals_with_zeros,
    random_monge_cost, rng,
};
use rand::Rng;

#[test]
fn duality_slackness_and_vertex_oracle() {
    let mut rng = rng(0x0ddba11);
    let limits = EnumLimits::default();
    for trial in 0..150 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=4);
        let marg = random_marginals_with_zeros(&mut rng, n, m, 6);
        let cost = random_cost(&mut rng, n, m, 5, 4);
        let sol = solve_forward(&cost, &marg).unwrap();
        // Primal feasibility and primal-dual equality.
        assert!(is_plan_for(&sol.plan, &marg), "trial {trial}");
        assert_eq!(sol.plan.dot(&cost), sol.value, "trial {trial}");
        assert_eq!(sol.potentials.dual_value(&marg), sol.value, "trial {trial}");
        assert!(sol.potentials.is_feasible_for(&cost), "trial {trial}");
        // Complementary slackness.
        assert!(
            check_primal_dual_optimal(&cost, &sol.plan, &sol.potentials).unwrap(),
            "trial {trial}"
        );
        // Brute-force value over the vertex set.
        let eps = enumerate_extreme_points(&marg, &limits).unwrap();
        assert_eq!(
            min_vertex_value(&cost, &eps.vertices),
            sol.value,
            "trial {trial}"
        );
        // The returned plan is a vertex.
        assert!(eps.position(&sol.plan).is_some(), "trial {trial}");
    }
}

#[test]
fn monotone_plan_is_optimal_for_monge_costs() {
    let mut rng = rng(0x3145);
    for _ in 0..80 {
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(2..=4);
        let cost = random_monge_cost(&mut rng, n, m);
        assert!(is_monge(&cost));
        let marg = random_marginals_with_zeros(&mut rng, n, m, 6);
        let sol = solve_forward(&cost, &marg).unwrap();
        let monotone = northwest_monotone_plan(&marg);
        assert!(is_plan_for(&monotone, &marg));
        assert_eq!(monotone.dot(&cost), sol.value);
    }
}

#[test]
fn monge_check_agrees_with_quadruple_definition() {
    let mut rng = rng(0x9009);
    let mut monge_seen = 0;
    for _ in 0..300 {
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=5);
        let cost = if rng.gen_bool(0.3) {
            random_monge_cost(&mut rng, n, m)
        } else {
            random_cost(&mut rng, n, m, 3, 2)
        };
        let expected = is_monge_all_quadruples(&cost);
        assert_eq!(is_monge(&cost), expected);
        if expected {
            monge_seen += 1;
        }
    }
    assert!(monge_seen > 30);
}

#[test]
fn shifts_preserve_the_optimizer_set() {
    let mut rng = rng(0x5317);
    let limits = EnumLimits::default();
    for _ in 0..60 {
        let n = rng.gen_range(2..=3);
        let m = rng.gen_range(2..=3);
        let marg = random_marginals_with_zeros(&mut rng, n, m, 5);
        let cost = random_cost(&mut rng, n, m, 4, 3);
        let a: Vec<Rational> = (0..n).map(|_| rat_int(rng.gen_range(-3..=3))).collect();
        let b: Vec<Rational> = (0..m).map(|_| rat_int(rng.gen_range(-3..=3))).collect();
        let shifted = shift(&cost, &a, &b);
        let eps = enumerate_extreme_points(&marg, &limits).unwrap();
        let argmin = |c: &Matrix| -> Vec<usize> {
            let values: Vec<Rational> = eps.vertices.iter().map(|v| v.dot(c)).collect();
            let best = values.iter().min().unwrap().clone();
            (0..eps.len()).filter(|&k| values[k] == best).collect()
        };
        assert_eq!(argmin(&cost), argmin(&shifted));
        // And the optimal value moves by <a, mu> + <b, nu>.
        let delta: Rational = a
            .iter()
            .zip(&marg.mu)
            .chain(b.iter().zip(&marg.nu))
            .map(|(x, y)| x * y)
            .sum();
        let v1 = solve_forward(&cost, &marg).unwrap().value;
        let v2 = solve_forward(&shifted, &marg).unwrap().value;
        assert_eq!(v2, v1 + delta);
    }
}

#[test]
fn primal_dual_check_iff_value_equality() {
    // With both sides feasible, slackness holds iff the primal and dual
    // values coincide.
    let mut rng = rng(0x777);
    let limits = EnumLimits::default();
    for _ in 0..40 {
        let n = rng.gen_range(2..=3);
        let m = rng.gen_range(2..=3);
        let marg = random_marginals_with_zeros(&mut rng, n, m, 4);
        let cost = random_cost(&mut rng, n, m, 3, 2);
        let sol = solve_forward(&cost, &marg).unwrap();
        let eps = enumerate_extreme_points(&marg, &limits).unwrap();
        for plan in &eps.vertices {
            let optimal =
                check_primal_dual_optimal(&cost, plan, &sol.potentials).unwrap();
            let equal = plan.dot(&cost) == sol.potentials.dual_value(&marg);
            assert_eq!(optimal, equal);
        }
    }
}

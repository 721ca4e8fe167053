//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line and enforcing its runtime budget. Tolerances are pinned
//! here, not configurable.
//!
//! Run with `cargo test -p iot-cli --test acceptance -- --nocapture`.

use std::process::Command;
use std::time::{Duration, Instant};

use iot_core::estimate::{
    asymptotic_ci, generate_noisy_observations, lasso_bound, lasso_lambda_rule, lasso_shifted,
    least_squares, random_marginal_sampler, rep_constant, DesignMatrix,
};
use iot_core::forward::{shift, shift_canonical_form, solve_forward};
use iot_core::identify::{
    identify_costs_only, identify_costs_only_equality_sufficient, identify_costs_plans,
    identify_costs_plans_rank, identify_plans_only, identify_potentials_monge,
    monge_support_cover_sufficient, IdentifyOptions,
};
use iot_core::polytope::{enumerate_extreme_points, minimal_face, EnumLimits};
use iot_core::rational::{rat, rat_int, to_f64, Rational};
use iot_core::types::{
    is_plan_for, plan_marginals, CostClass, MarginalPair, Matrix, ObservationRecord,
    ObservationSet, Verdict,
};
use iot_testkit::fixtures;
use iot_testkit::oracles::{
    extreme_points_by_support_patterns, min_vertex_value, random_cost, random_marginals,
    random_marginals_with_zeros, rng,
};
use iot_testkit::{rmat, rmarg};
use num_traits::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::StandardNormal;

fn pass(criterion: &str, detail: String) {
    println!("[{criterion}] PASS — {detail}");
}

fn within(start: Instant, budget: Duration, criterion: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "{criterion}: runtime {elapsed:?} exceeded budget {budget:?}"
    );
}

#[test]
fn criterion_01_totals_only_golden() {
    let start = Instant::now();
    let obs = fixtures::totals_only_2x2();
    let opts = IdentifyOptions::default();

    let report = identify_costs_only(&obs, &opts).unwrap();
    assert_eq!(report.verdict, Verdict::Identifiable);
    assert_eq!(
        report.recovered_cost.unwrap(),
        fixtures::totals_only_2x2_cost(),
        "recovered cost differs (zero tolerance)"
    );

    let eq_only = identify_costs_only_equality_sufficient(&obs, &opts).unwrap();
    assert_ne!(eq_only.verdict, Verdict::Identifiable);
    assert!(
        eq_only
            .diagnostics
            .iter()
            .any(|d| d.contains("not decidable")),
        "equality-only check must flag itself as not decidable"
    );

    within(start, Duration::from_secs(1), "criterion 1");
    pass(
        "criterion 1",
        format!(
            "totals-only identification exact; equality-only check not decidable ({:?})",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_02_potentials_monge_golden() {
    let start = Instant::now();
    let obs = fixtures::potentials_monge_2x2();
    let report = identify_potentials_monge(&obs, &IdentifyOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Identifiable);
    assert_eq!(
        report.recovered_cost.unwrap(),
        fixtures::potentials_monge_2x2_cost(),
        "recovered cost differs (zero tolerance)"
    );

    let marginals: Vec<MarginalPair> =
        obs.records.iter().map(|r| r.marginals.clone()).collect();
    assert!(
        !monge_support_cover_sufficient(&marginals),
        "support-cover sufficient condition must NOT fire on this data"
    );

    within(start, Duration::from_secs(1), "criterion 2");
    pass(
        "criterion 2",
        format!(
            "potentials (Monge) identification exact; cover condition false ({:?})",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_03a_totals_plans_golden() {
    let start = Instant::now();
    let report =
        identify_costs_plans(&fixtures::totals_plans_2x2(), &IdentifyOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Identifiable);
    assert_eq!(
        report.recovered_cost.unwrap(),
        fixtures::totals_plans_2x2_cost(),
        "recovered cost differs (zero tolerance)"
    );
    within(start, Duration::from_secs(1), "criterion 3a");
    pass(
        "criterion 3a",
        format!("totals+plans identification exact ({:?})", start.elapsed()),
    );
}

#[test]
fn criterion_03b_inconsistency_example() {
    let start = Instant::now();
    let obs = fixtures::inconsistent_totals_plans_2x2();
    let opts = IdentifyOptions::default();

    // Rank check: unique equality solution, failing verification.
    let rank_report = identify_costs_plans_rank(&obs, &opts).unwrap();
    assert_eq!(
        rank_report.recovered_cost.clone().unwrap(),
        fixtures::inconsistent_equality_solution()
    );
    assert_eq!(rank_report.verdict, Verdict::Inconsistent);

    // Full system: infeasible.
    let full = identify_costs_plans(&obs, &opts).unwrap();
    assert_eq!(full.verdict, Verdict::Inconsistent);

    // The real binary prints the exact computed totals 3/4, 1, 2, 19/11.
    let dir = tempfile::tempdir().unwrap();
    let obs_path = dir.path().join("obs.json");
    let cost_path = dir.path().join("cost.json");
    std::fs::write(
        &obs_path,
        serde_json::to_string(&iot_core::files::ObservationFile::from_set(&obs)).unwrap(),
    )
    .unwrap();
    std::fs::write(
        &cost_path,
        serde_json::to_string(&iot_core::files::CostFile::from_matrix(
            &fixtures::inconsistent_equality_solution(),
            &CostClass::General,
        ))
        .unwrap(),
    )
    .unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_iot"))
        .args(["verify", "--cost"])
        .arg(&cost_path)
        .arg("--observations")
        .arg(&obs_path)
        .output()
        .unwrap();
    let stdout = String::from_utf8(output.stdout).unwrap();
    for expected in [
        "record 0: FAIL computed=3/4",
        "record 1: PASS computed=1",
        "record 2: PASS computed=2",
        "record 3: FAIL computed=19/11",
    ] {
        assert!(
            stdout.contains(expected),
            "verify output missing {expected:?}:\n{stdout}"
        );
    }
    assert_eq!(output.status.code(), Some(3));

    within(start, Duration::from_secs(2), "criterion 3b");
    pass(
        "criterion 3b",
        format!(
            "rank solution [[8/3,10/3],[1/3,0]] flagged inconsistent; verify prints 3/4, 1, 2, 19/11 ({:?})",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_04_dirac_plans() {
    let start = Instant::now();
    let mut rng = rng(0x04ac);
    for n in [2usize, 3] {
        let m = n;
        let mut records = Vec::new();
        let mut expected = Matrix::zero(n, m);
        for j in 0..m {
            for i in 0..n {
                let alpha = rat(rng.gen_range(-50..=50), rng.gen_range(1..=9));
                let plan = Matrix::from_fn(n, m, |r, c| {
                    if (r, c) == (i, j) {
                        rat_int(1)
                    } else {
                        rat_int(0)
                    }
                });
                expected.set(i, j, alpha.clone());
                records.push(ObservationRecord {
                    marginals: plan_marginals(&plan),
                    alpha: Some(alpha),
                    plan: Some(plan),
                    potentials: None,
                });
            }
        }
        let obs = ObservationSet {
            records,
            cost_class: CostClass::General,
        };
        let report = identify_costs_plans(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Identifiable, "size {n}");
        assert_eq!(report.recovered_cost.unwrap(), expected, "size {n}");
    }
    pass(
        "criterion 4",
        format!(
            "Dirac plans pin every cell exactly for N = M = 2, 3 ({:?})",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_05_forward_duality_properties() {
    let start = Instant::now();
    let budget = Duration::from_secs(60);
    let mut rng = rng(0x05f0);
    let limits = EnumLimits::default();
    let mut monge_hits = 0;
    let total = 500;
    for trial in 0..total {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=4);
        let marg = random_marginals_with_zeros(&mut rng, n, m, 7);
        let cost = if trial % 3 == 0 {
            iot_testkit::oracles::random_monge_cost(&mut rng, n, m)
        } else {
            random_cost(&mut rng, n, m, 5, 4)
        };
        let sol = solve_forward(&cost, &marg).unwrap();
        // Exact primal-dual equality.
        assert_eq!(sol.plan.dot(&cost), sol.value, "trial {trial}");
        assert_eq!(
            sol.potentials.dual_value(&marg),
            sol.value,
            "trial {trial}: dual value differs"
        );
        assert!(sol.potentials.is_feasible_for(&cost), "trial {trial}");
        assert!(is_plan_for(&sol.plan, &marg), "trial {trial}");
        // Complementary slackness at every support cell.
        for (i, j) in sol.plan.support() {
            assert_eq!(
                &sol.potentials.f[i] + &sol.potentials.g[j],
                *cost.get(i, j),
                "trial {trial}: slackness violated at ({i}, {j})"
            );
        }
        // The monotone plan is optimal whenever the cost is Monge.
        if iot_core::forward::is_monge(&cost) {
            monge_hits += 1;
            let monotone = iot_core::forward::northwest_monotone_plan(&marg);
            assert_eq!(
                monotone.dot(&cost),
                sol.value,
                "trial {trial}: monotone plan suboptimal on a Monge cost"
            );
        }
        // Value agrees with the vertex-minimum oracle.
        let eps = enumerate_extreme_points(&marg, &limits).unwrap();
        assert_eq!(
            min_vertex_value(&cost, &eps.vertices),
            sol.value,
            "trial {trial}"
        );
    }
    assert!(monge_hits >= 100, "too few Monge instances: {monge_hits}");
    within(start, budget, "criterion 5");
    pass(
        "criterion 5",
        format!(
            "{total} random instances: exact duality, slackness, Monge monotone optimality \
             ({monge_hits} Monge) ({:?})",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_06_round_trip_totals_plans() {
    let start = Instant::now();
    let budget = Duration::from_secs(120);
    let mut rng = rng(0x06bb);
    let opts = IdentifyOptions::default();
    let total = 200;
    let mut identified = 0;
    for trial in 0..total {
        // Mix of sizes, biased toward the cheap ones.
        let (n, m) = match trial % 5 {
            0 => (3, 3),
            1 => (2, 3),
            2 => (3, 2),
            _ => (2, 2),
        };
        let cost = random_cost(&mut rng, n, m, 4, 3);
        let k = rng.gen_range(1..=4);
        let mut records = Vec::with_capacity(k);
        let mut diffs: Vec<Vec<Rational>> = Vec::new();
        let limits = EnumLimits::default();
        for _ in 0..k {
            let marg = random_marginals(&mut rng, n, m, 5);
            let sol = solve_forward(&cost, &marg).unwrap();
            // Collect the face differences for the orthogonality check.
            let eps = enumerate_extreme_points(&marg, &limits).unwrap();
            let face = minimal_face(&sol.plan, &eps).unwrap();
            let plan_vec = sol.plan.to_col_major();
            for &idx in &face.vertex_indices {
                let u = eps.vertices[idx].to_col_major();
                diffs.push(plan_vec.iter().zip(&u).map(|(a, b)| a - b).collect());
            }
            records.push(ObservationRecord {
                marginals: marg,
                alpha: Some(sol.value),
                plan: Some(sol.plan),
                potentials: None,
            });
        }
        let obs = ObservationSet {
            records,
            cost_class: CostClass::General,
        };
        // Membership certificate: the true cost annihilates every observed
        // difference vector.
        let cost_vec = cost.to_col_major();
        for d in &diffs {
            let dot: Rational = d.iter().zip(&cost_vec).map(|(a, b)| a * b).sum();
            assert!(dot.is_zero(), "trial {trial}: E_K c != 0");
        }
        let report = identify_costs_plans(&obs, &opts).unwrap();
        match report.verdict {
            Verdict::Identifiable => {
                assert_eq!(
                    report.recovered_cost.unwrap(),
                    cost,
                    "trial {trial}: recovered cost differs"
                );
                identified += 1;
            }
            Verdict::Ambiguous => {
                let ranges = report
                    .ambiguity
                    .unwrap()
                    .coordinate_ranges
                    .expect("ranges present");
                for (d, value) in cost_vec.iter().enumerate() {
                    let (lo, hi) = &ranges[d];
                    assert!(
                        lo.as_ref().map_or(true, |l| l <= value)
                            && hi.as_ref().map_or(true, |h| value <= h),
                        "trial {trial}: true cost outside reported class at coordinate {d}"
                    );
                }
            }
            other => panic!("trial {trial}: unexpected verdict {other:?}"),
        }
    }
    within(start, budget, "criterion 6");
    pass(
        "criterion 6",
        format!(
            "{total} round trips: exact recovery ({identified}) or class containing the truth \
             ({:?})",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_07_plans_only_dimension() {
    let start = Instant::now();
    let marg = rmarg(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]);
    let interior = rmat(&[&[(1, 4), (1, 4)], &[(1, 4), (1, 4)]]);
    let obs = ObservationSet {
        records: vec![ObservationRecord {
            marginals: marg,
            alpha: None,
            plan: Some(interior),
            potentials: None,
        }],
        cost_class: CostClass::General,
    };
    let report = identify_plans_only(&obs, &IdentifyOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::IdentifiableInQuotient);
    assert_eq!(report.residual_dimension, Some(0));
    let amb = report.ambiguity.unwrap();
    assert_eq!(amb.shift_basis.len(), 3, "shift subspace dimension N+M-1");
    assert!(amb.free_directions.is_empty(), "no residual directions");
    assert!(report.recovered_cost.unwrap().is_zero());

    // Canonical form is zero exactly for pure shifts.
    let mut rng = rng(0x07aa);
    for _ in 0..50 {
        let a: Vec<Rational> = (0..2).map(|_| rat(rng.gen_range(-9..=9), 1)).collect();
        let b: Vec<Rational> = (0..2).map(|_| rat(rng.gen_range(-9..=9), 1)).collect();
        let pure = shift(&Matrix::zero(2, 2), &a, &b);
        assert!(shift_canonical_form(&pure).is_zero());
        // Any single-cell bump off the shift subspace breaks it.
        let mut bumped = pure.clone();
        bumped.set(1, 1, bumped.get(1, 1) + rat_int(1));
        assert!(!shift_canonical_form(&bumped).is_zero());
    }
    pass(
        "criterion 7",
        format!(
            "interior plan gives S = 0 with a pure shift class; canonical form characterizes \
             shifts ({:?})",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_08_vertex_enumeration_oracle() {
    let start = Instant::now();
    let mut rng = rng(0x08cc);
    let limits = EnumLimits::default();
    let total = 100;
    for trial in 0..total {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=4);
        let marg = random_marginals_with_zeros(&mut rng, n, m, 6);
        let ours = enumerate_extreme_points(&marg, &limits).unwrap();
        let oracle = extreme_points_by_support_patterns(&marg);
        assert_eq!(
            ours.vertices, oracle,
            "trial {trial}: enumeration disagrees with the support-pattern oracle"
        );
    }
    pass(
        "criterion 8",
        format!(
            "{total} random marginal pairs match the brute-force oracle exactly ({:?})",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_09_statistical_suite() {
    let start = Instant::now();
    let budget = Duration::from_secs(300);
    let truth_cost = fixtures::totals_only_2x2_cost();
    let truth: Vec<f64> = truth_cost.to_col_major().iter().map(to_f64).collect();

    // (a) Noiseless full-rank recovery within 1e-9.
    {
        let mut sampler = random_marginal_sampler(2, 2, 9);
        let data =
            generate_noisy_observations(&truth_cost, &mut sampler, 150, 0.0, 0x9a).unwrap();
        let report = least_squares(&data.design).unwrap();
        let err: f64 = report
            .c_hat
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-9, "(a) noiseless recovery error {err}");
    }

    // (b) CI coverage at level 0.95 with K = 500, sigma = 0.1, 1000
    // replicates: empirical coverage within [0.92, 0.98].
    {
        let k = 500;
        let sigma = 0.1;
        let mut sampler = random_marginal_sampler(2, 2, 9);
        let base =
            generate_noisy_observations(&truth_cost, &mut sampler, k, 0.0, 0x9b).unwrap();
        let exact_alphas: Vec<f64> = base.alphas.iter().map(to_f64).collect();
        let mut covered = 0usize;
        let mut total_entries = 0usize;
        for rep in 0..1000u64 {
            let mut noise_rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9b00 + rep);
            let mut design = base.design.clone();
            design.sigma = None; // noise level is estimated from residuals
            for (kk, alpha) in exact_alphas.iter().enumerate() {
                let eps: f64 = noise_rng.sample(StandardNormal);
                design.y[kk] = alpha + sigma * eps;
            }
            let report = least_squares(&design).unwrap();
            let ci = asymptotic_ci(&report, 0.95).unwrap();
            for (d, (lo, hi)) in ci.iter().enumerate() {
                total_entries += 1;
                if *lo <= truth[d] && truth[d] <= *hi {
                    covered += 1;
                }
            }
        }
        let coverage = covered as f64 / total_entries as f64;
        assert!(
            (0.92..=0.98).contains(&coverage),
            "(b) empirical coverage {coverage} outside [0.92, 0.98]"
        );
    }

    // (c) Median error strictly decreasing over K in {50, 200, 800}.
    {
        let mut medians = Vec::new();
        for (stage, k) in [50usize, 200, 800].into_iter().enumerate() {
            let mut errors: Vec<f64> = (0..21)
                .map(|rep| {
                    let mut sampler = random_marginal_sampler(2, 2, 9);
                    let seed = 0x9c00 + 100 * (stage as u64) + rep;
                    let data =
                        generate_noisy_observations(&truth_cost, &mut sampler, k, 0.1, seed)
                            .unwrap();
                    let report = least_squares(&data.design).unwrap();
                    report
                        .c_hat
                        .iter()
                        .zip(&truth)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(errors[errors.len() / 2]);
        }
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "(c) medians not strictly decreasing: {medians:?}"
        );
    }

    // (d) LASSO: lambda = 0 matches least squares within 1e-8, and the
    // seeded baseline-sparse run satisfies the error bound with kappa from
    // the restricted-eigenvalue certificate.
    {
        let mut sampler = random_marginal_sampler(2, 2, 9);
        let data =
            generate_noisy_observations(&truth_cost, &mut sampler, 100, 0.05, 0x9d).unwrap();
        let ls = least_squares(&data.design).unwrap();
        let lasso0 = lasso_shifted(&data.design, 0.0, 0.0).unwrap();
        let gap: f64 = ls
            .c_hat
            .iter()
            .zip(&lasso0.c_hat)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-8, "(d) lambda=0 vs least squares gap {gap}");

        // Baseline-sparse truth: two cells off the baseline b0 = 2.
        let b0 = 2.0;
        let sparse_cost = rmat(&[&[(2, 1), (3, 1)], &[(2, 1), (1, 1)]]);
        let sparse_truth: Vec<f64> =
            sparse_cost.to_col_major().iter().map(to_f64).collect();
        let support: Vec<usize> = sparse_truth
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != b0)
            .map(|(d, _)| d)
            .collect();
        assert_eq!(support.len(), 2);
        let sigma = 0.05;
        let k = 100;
        let delta = 0.05;
        let mut sampler = random_marginal_sampler(2, 2, 9);
        let data =
            generate_noisy_observations(&sparse_cost, &mut sampler, k, sigma, 0x9e).unwrap();
        let rep = rep_constant(&data.design, &support).unwrap();
        assert!(rep.kappa > 0.0, "(d) design fails the restricted eigenvalue property");
        let lambda = lasso_lambda_rule(sigma, 2, 2, k, delta);
        let estimate = lasso_shifted(&data.design, lambda, b0).unwrap();
        let err: f64 = estimate
            .c_hat
            .iter()
            .zip(&sparse_truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let bound = lasso_bound(sigma, rep.kappa, support.len(), 2, 2, k, delta);
        assert!(
            err <= bound,
            "(d) error {err} exceeds the theorem bound {bound} (kappa = {})",
            rep.kappa
        );
    }

    within(start, budget, "criterion 9");
    pass(
        "criterion 9",
        format!(
            "noiseless recovery, CI coverage, decreasing medians and the LASSO bound all hold \
             ({:?})",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_10_constraint_reduction_equivalence() {
    let start = Instant::now();
    let mut rng = rng(0x10dd);
    let base_opts = IdentifyOptions::default();
    let reduced_opts = IdentifyOptions {
        reduce_constraints: true,
        ..IdentifyOptions::default()
    };
    let total = 50;
    for trial in 0..total {
        let cost = random_cost(&mut rng, 2, 3, 4, 3);
        let k = rng.gen_range(1..=3);
        let records = (0..k)
            .map(|_| {
                let marg = random_marginals(&mut rng, 2, 3, 5);
                let sol = solve_forward(&cost, &marg).unwrap();
                ObservationRecord {
                    marginals: marg,
                    alpha: Some(sol.value),
                    plan: Some(sol.plan),
                    potentials: None,
                }
            })
            .collect();
        let obs = ObservationSet {
            records,
            cost_class: CostClass::General,
        };
        let full = identify_costs_plans(&obs, &base_opts).unwrap();
        let reduced = identify_costs_plans(&obs, &reduced_opts).unwrap();
        assert_eq!(full.verdict, reduced.verdict, "trial {trial}");
        assert_eq!(
            full.recovered_cost, reduced.recovered_cost,
            "trial {trial}"
        );
        let ranges = |r: &iot_core::types::IdentifiabilityReport| {
            r.ambiguity.as_ref().and_then(|a| a.coordinate_ranges.clone())
        };
        assert_eq!(ranges(&full), ranges(&reduced), "trial {trial}");
    }
    within(start, Duration::from_secs(120), "criterion 10");
    pass(
        "criterion 10",
        format!(
            "{total} random 2x3 instances: reduced and full systems agree exactly ({:?})",
            start.elapsed()
        ),
    );
}

//! Golden instances shared between unit, property and acceptance tests.

use iot_core::rational::{rat, rat_int, Rational};
use iot_core::types::{
    plan_marginals, CostClass, Matrix, ObservationRecord, ObservationSet, PotentialPair,
};

use crate::{rmarg, rmat};

/// Four totals-only records on 2x2 with exactly one consistent cost.
pub fn totals_only_2x2() -> ObservationSet {
    let data = [
        (rmarg(&[(3, 4), (1, 4)], &[(5, 8), (3, 8)]), rat(7, 4)),
        (rmarg(&[(3, 7), (4, 7)], &[(1, 5), (4, 5)]), rat_int(1)),
        (rmarg(&[(4, 5), (1, 5)], &[(1, 2), (1, 2)]), rat_int(1)),
        (rmarg(&[(3, 7), (4, 7)], &[(1, 2), (1, 2)]), rat_int(1)),
    ];
    ObservationSet {
        records: data
            .into_iter()
            .map(|(marginals, alpha)| ObservationRecord::costs_only(marginals, alpha))
            .collect(),
        cost_class: CostClass::General,
    }
}

/// The unique cost consistent with [`totals_only_2x2`].
pub fn totals_only_2x2_cost() -> Matrix {
    rmat(&[&[(9, 2), (-2, 1)], &[(13, 4), (13, 4)]])
}

/// Three records with totals and potentials, identifiable within the Monge
/// class.
pub fn potentials_monge_2x2() -> ObservationSet {
    let data = [
        (
            rmarg(&[(1, 2), (1, 2)], &[(1, 1), (0, 1)]),
            rat_int(1),
            vec![rat_int(0), rat_int(-2)],
            vec![rat_int(2), rat_int(0)],
        ),
        (
            rmarg(&[(1, 3), (2, 3)], &[(1, 1), (0, 1)]),
            rat(2, 3),
            vec![rat_int(0), rat_int(-2)],
            vec![rat_int(2), rat_int(0)],
        ),
        (
            rmarg(&[(1, 1), (0, 1)], &[(2, 5), (3, 5)]),
            rat(5, 3),
            vec![rat_int(2), rat_int(0)],
            vec![rat_int(0), rat(-5, 9)],
        ),
    ];
    ObservationSet {
        records: data
            .into_iter()
            .map(|(marginals, alpha, f, g)| ObservationRecord {
                marginals,
                alpha: Some(alpha),
                plan: None,
                potentials: Some(PotentialPair { f, g }),
            })
            .collect(),
        cost_class: CostClass::Monge,
    }
}

/// The unique Monge cost consistent with [`potentials_monge_2x2`].
pub fn potentials_monge_2x2_cost() -> Matrix {
    rmat(&[&[(2, 1), (13, 9)], &[(0, 1), (-5, 9)]])
}

/// Three totals-plus-plans records with exactly one consistent cost even
/// though the observed vertices span fewer than NM dimensions.
pub fn totals_plans_2x2() -> ObservationSet {
    let plans = [
        (rmat(&[&[(3, 20), (1, 4)], &[(3, 5), (0, 1)]]), rat(1, 3)),
        (rmat(&[&[(0, 1), (1, 2)], &[(1, 2), (0, 1)]]), rat_int(1)),
        (rmat(&[&[(1, 2), (1, 10)], &[(0, 1), (2, 5)]]), rat_int(1)),
    ];
    ObservationSet {
        records: plans
            .into_iter()
            .map(|(plan, alpha)| ObservationRecord {
                marginals: plan_marginals(&plan),
                alpha: Some(alpha),
                plan: Some(plan),
                potentials: None,
            })
            .collect(),
        cost_class: CostClass::General,
    }
}

/// The unique cost consistent with [`totals_plans_2x2`].
pub fn totals_plans_2x2_cost() -> Matrix {
    rmat(&[&[(-1, 3), (7, 3)], &[(-1, 3), (7, 3)]])
}

/// Four linearly independent plans whose totals admit no consistent cost.
/// The equality system still has a unique solution, which fails the
/// consistency verification with computed totals 3/4, 1, 2, 19/11.
pub fn inconsistent_totals_plans_2x2() -> ObservationSet {
    let plans = [
        (rmat(&[&[(0, 1), (1, 4)], &[(1, 2), (1, 4)]]), rat_int(1)),
        (rmat(&[&[(1, 3), (0, 1)], &[(1, 3), (1, 3)]]), rat_int(1)),
        (rmat(&[&[(1, 3), (1, 3)], &[(0, 1), (1, 3)]]), rat_int(2)),
        (rmat(&[&[(4, 11), (3, 11)], &[(4, 11), (0, 1)]]), rat_int(2)),
    ];
    ObservationSet {
        records: plans
            .into_iter()
            .map(|(plan, alpha)| ObservationRecord {
                marginals: plan_marginals(&plan),
                alpha: Some(alpha),
                plan: Some(plan),
                potentials: None,
            })
            .collect(),
        cost_class: CostClass::General,
    }
}

/// The unique equality-system solution for
/// [`inconsistent_totals_plans_2x2`].
pub fn inconsistent_equality_solution() -> Matrix {
    rmat(&[&[(8, 3), (10, 3)], &[(1, 3), (0, 1)]])
}

/// The exact forward totals of [`inconsistent_equality_solution`] on the
/// four records.
pub fn inconsistent_computed_totals() -> Vec<Rational> {
    vec![rat(3, 4), rat_int(1), rat_int(2), rat(19, 11)]
}

//! Property-based checks over randomized inputs.

use iot_core::forward::{northwest_monotone_plan, shift, shift_canonical_form};
use iot_core::lp::{nullspace_basis, rank_of};
use iot_core::rational::{parse_rational, render_rational, Rational};
use iot_core::types::{is_plan_for, MarginalPair, Matrix};
use num_traits::Zero;
use proptest::prelude::*;

fn arb_rational() -> impl Strategy<Value = Rational> {
    (-1000i64..1000, 1i64..200).prop_map(|(p, q)| Rational::new(p.into(), q.into()))
}

fn arb_marginals(n: usize, m: usize) -> impl Strategy<Value = MarginalPair> {
    (
        proptest::collection::vec(1u32..12, n),
        proptest::collection::vec(1u32..12, m),
    )
        .prop_map(|(wu, wv)| {
            let norm = |w: Vec<u32>| {
                let total: u32 = w.iter().sum();
                w.into_iter()
                    .map(|x| Rational::new(x.into(), total.into()))
                    .collect::<Vec<_>>()
            };
            MarginalPair::new(norm(wu), norm(wv))
        })
}

fn arb_matrix(n: usize, m: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(arb_rational(), n * m).prop_map(move |entries| {
        Matrix::from_fn(n, m, |i, j| entries[i * m + j].clone())
    })
}

proptest! {
    #[test]
    fn parse_render_identity(x in arb_rational()) {
        let text = render_rational(&x);
        prop_assert_eq!(parse_rational(&text).unwrap(), x);
    }

    #[test]
    fn parse_accepts_unreduced_fractions(p in -500i64..500, q in 1i64..100) {
        let x = parse_rational(&format!("{p}/{q}")).unwrap();
        prop_assert_eq!(x, Rational::new(p.into(), q.into()));
    }

    #[test]
    fn monotone_plan_is_always_feasible(marg in arb_marginals(3, 4)) {
        let plan = northwest_monotone_plan(&marg);
        prop_assert!(is_plan_for(&plan, &marg));
    }

    #[test]
    fn canonical_form_is_idempotent_and_shift_invariant(
        c in arb_matrix(3, 3),
        a in proptest::collection::vec(arb_rational(), 3),
        b in proptest::collection::vec(arb_rational(), 3),
    ) {
        let canon = shift_canonical_form(&c);
        prop_assert_eq!(shift_canonical_form(&canon), canon.clone());
        // First row and column are zeroed.
        for j in 0..3 {
            prop_assert!(canon.get(0, j).is_zero());
        }
        for i in 0..3 {
            prop_assert!(canon.get(i, 0).is_zero());
        }
        // Shifting never changes the canonical form.
        let shifted = shift(&c, &a, &b);
        prop_assert_eq!(shift_canonical_form(&shifted), canon);
    }

    #[test]
    fn rank_bounds_and_combination_invariance(
        rows in proptest::collection::vec(
            proptest::collection::vec(arb_rational(), 4), 1..5),
        c1 in -4i64..4,
        c2 in -4i64..4,
    ) {
        let rank = rank_of(&rows);
        prop_assert!(rank <= rows.len().min(4));
        let combo: Vec<Rational> = (0..4)
            .map(|d| {
                let mut acc = Rational::zero();
                if !rows.is_empty() {
                    acc += &rows[0][d] * Rational::from_integer(c1.into());
                }
                if rows.len() > 1 {
                    acc += &rows[1][d] * Rational::from_integer(c2.into());
                }
                acc
            })
            .collect();
        let mut extended = rows.clone();
        extended.push(combo);
        prop_assert_eq!(rank_of(&extended), rank);
    }

    #[test]
    fn nullspace_is_orthogonal_and_complementary(
        rows in proptest::collection::vec(
            proptest::collection::vec(arb_rational(), 5), 0..4),
    ) {
        let basis = nullspace_basis(5, &rows);
        prop_assert_eq!(basis.len(), 5 - rank_of(&rows));
        for v in &basis {
            for row in &rows {
                let dot: Rational = row.iter().zip(v).map(|(a, b)| a * b).sum();
                prop_assert!(dot.is_zero());
            }
        }
    }
}

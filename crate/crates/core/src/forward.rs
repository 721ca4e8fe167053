//! Forward optimal transport: exact optimal value, a vertex optimal plan and
//! optimal dual potentials, plus the Monge machinery and shift-equivalence
//! utilities used throughout the identifiability procedures.

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::lp::{solve_standard, StandardLp, StandardOutcome};
use crate::rational::Rational;
use crate::types::{is_plan_for, MarginalPair, Matrix, PotentialPair};

/// Primal and dual solution of one transport problem. Satisfies
/// `<c, plan> = value = <f, mu> + <g, nu>` exactly, with complementary
/// slackness on the plan support.
#[derive(Clone, Debug)]
pub struct ForwardSolution {
    pub value: Rational,
    pub plan: Matrix,
    pub potentials: PotentialPair,
}

/// Solves `min <c, pi>` over the transportation polytope exactly.
///
/// The LP is the vectorized transportation problem; the returned plan is a
/// vertex and the potentials are the dual variables of the final simplex
/// basis. Potentials are a non-canonical representative of their equivalence
/// class under `(f + t, g - t)`: the last column constraint is dropped as
/// redundant, which pins `g[M-1] = 0`.
pub fn solve_forward(cost: &Matrix, marg: &MarginalPair) -> Result<ForwardSolution, Error> {
    marg.check().map_err(Error::InvalidObservations)?;
    let (n, m) = (marg.n(), marg.m());
    if cost.nrows() != n || cost.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "cost is {}x{}, marginals are {}x{}",
            cost.nrows(),
            cost.ncols(),
            n,
            m
        )));
    }
    // Variables: pi in column-major order, pi >= 0.
    // Rows: N row sums, then the first M-1 column sums (the last is implied).
    let ncols = n * m;
    let mut rows = Vec::with_capacity(n + m - 1);
    let mut rhs = Vec::with_capacity(n + m - 1);
    for i in 0..n {
        let mut row = vec![Rational::zero(); ncols];
        for j in 0..m {
            row[j * n + i] = Rational::one();
        }
        rows.push(row);
        rhs.push(marg.mu[i].clone());
    }
    for j in 0..m - 1 {
        let mut row = vec![Rational::zero(); ncols];
        for i in 0..n {
            row[j * n + i] = Rational::one();
        }
        rows.push(row);
        rhs.push(marg.nu[j].clone());
    }
    let lp = StandardLp {
        ncols,
        cost: cost.to_col_major(),
        rows,
        rhs,
    };
    match solve_standard(&lp) {
        StandardOutcome::Optimal { x, value, duals } => {
            let plan = Matrix::from_col_major(n, m, &x)?;
            let f: Vec<Rational> = duals[..n].to_vec();
            let mut g: Vec<Rational> = duals[n..].to_vec();
            g.push(Rational::zero());
            Ok(ForwardSolution {
                value,
                plan,
                potentials: PotentialPair { f, g },
            })
        }
        // The transportation polytope is nonempty and compact.
        StandardOutcome::Infeasible | StandardOutcome::Unbounded => unreachable!(
            "transportation problem with valid marginals is feasible and bounded"
        ),
    }
}

/// Complementary slackness check: with `plan` feasible and `(f, g)`
/// dual-feasible for `cost`, both are optimal iff `f_i + g_j = c[i,j]` on
/// every support cell. Dual-infeasible potentials are an error, not `false`.
pub fn check_primal_dual_optimal(
    cost: &Matrix,
    plan: &Matrix,
    potentials: &PotentialPair,
) -> Result<bool, Error> {
    let marg = crate::types::plan_marginals(plan);
    if !is_plan_for(plan, &marg) {
        return Err(Error::PlanNotInPolytope("plan has a negative entry".into()));
    }
    if potentials.f.len() != cost.nrows() || potentials.g.len() != cost.ncols() {
        return Err(Error::DimensionMismatch("potential lengths".into()));
    }
    for (i, j, c) in cost.entries() {
        if &potentials.f[i] + &potentials.g[j] > *c {
            return Err(Error::DualInfeasible { i, j });
        }
    }
    Ok(plan
        .entries()
        .filter(|(_, _, v)| v.is_positive())
        .all(|(i, j, _)| &potentials.f[i] + &potentials.g[j] == *cost.get(i, j)))
}

/// Monge property: `c[i,j] + c[r,s] <= c[i,s] + c[r,j]` for all `i < r`,
/// `j < s`. Checking adjacent 2x2 minors suffices.
pub fn is_monge(cost: &Matrix) -> bool {
    let (n, m) = (cost.nrows(), cost.ncols());
    for i in 0..n.saturating_sub(1) {
        for j in 0..m.saturating_sub(1) {
            if cost.get(i, j) + cost.get(i + 1, j + 1) > cost.get(i, j + 1) + cost.get(i + 1, j) {
                return false;
            }
        }
    }
    true
}

/// The monotone (north-west) plan: cell `(i,j)` receives the length of
/// `(A_{i-1}, A_i] ∩ (B_{j-1}, B_j]` where `A`, `B` are the cumulative sums
/// of the marginals. Optimal for every Monge cost.
pub fn northwest_monotone_plan(marg: &MarginalPair) -> Matrix {
    let cum = |v: &[Rational]| {
        let mut acc = Rational::zero();
        let mut out = vec![Rational::zero()];
        for x in v {
            acc += x;
            out.push(acc.clone());
        }
        out
    };
    let a = cum(&marg.mu);
    let b = cum(&marg.nu);
    Matrix::from_fn(marg.n(), marg.m(), |i, j| {
        let lo = a[i].clone().max(b[j].clone());
        let hi = a[i + 1].clone().min(b[j + 1].clone());
        if hi > lo {
            hi - lo
        } else {
            Rational::zero()
        }
    })
}

/// Entrywise `c + a (+) b`.
pub fn shift(cost: &Matrix, a: &[Rational], b: &[Rational]) -> Matrix {
    debug_assert_eq!(a.len(), cost.nrows());
    debug_assert_eq!(b.len(), cost.ncols());
    Matrix::from_fn(cost.nrows(), cost.ncols(), |i, j| {
        cost.get(i, j) + &a[i] + &b[j]
    })
}

/// The unique shift-equivalent representative with zero first row and first
/// column: subtract `c[i,0]` from row `i`, then the resulting `c[0,j]` from
/// column `j`. Two costs are shift equivalent iff their canonical forms are
/// equal.
pub fn shift_canonical_form(cost: &Matrix) -> Matrix {
    let (n, m) = (cost.nrows(), cost.ncols());
    let mut out = Matrix::zero(n, m);
    for i in 0..n {
        for j in 0..m {
            out.set(i, j, cost.get(i, j) - cost.get(i, 0));
        }
    }
    let first_row: Vec<Rational> = (0..m).map(|j| out.get(0, j).clone()).collect();
    for i in 0..n {
        for j in 0..m {
            let v = out.get(i, j) - &first_row[j];
            out.set(i, j, v);
        }
    }
    out
}

/// Whether two costs differ by a pure shift `a (+) b`.
pub fn shift_equivalent(c1: &Matrix, c2: &Matrix) -> bool {
    shift_canonical_form(c1) == shift_canonical_form(c2)
}

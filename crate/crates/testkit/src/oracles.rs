//! Brute-force reference computations.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use iot_core::lp::LinearSystem;
use iot_core::rational::{rat_int, Rational};
use iot_core::types::{MarginalPair, Matrix};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Extreme points by acyclic support patterns
// ---------------------------------------------------------------------------

/// Every extreme point of the transportation polytope, found by enumerating
/// all acyclic support patterns of size at most N + M - 1, solving the
/// forced triangular system per pattern, and keeping the solutions that
/// reproduce the marginals exactly with nonnegative entries.
pub fn extreme_points_by_support_patterns(marg: &MarginalPair) -> Vec<Matrix> {
    let (n, m) = (marg.n(), marg.m());
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .collect();
    let max_size = n + m - 1;
    let mut found: BTreeSet<Matrix> = BTreeSet::new();
    let mut pattern: Vec<(usize, usize)> = Vec::new();

    fn acyclic(pattern: &[(usize, usize)], n: usize, m: usize) -> bool {
        // Cycle detection by repeated leaf stripping on the bipartite
        // support graph.
        let mut deg_row = vec![0usize; n];
        let mut deg_col = vec![0usize; m];
        for &(i, j) in pattern {
            deg_row[i] += 1;
            deg_col[j] += 1;
        }
        let mut live: Vec<bool> = vec![true; pattern.len()];
        let mut remaining = pattern.len();
        loop {
            let mut stripped = false;
            for (e, &(i, j)) in pattern.iter().enumerate() {
                if live[e] && (deg_row[i] == 1 || deg_col[j] == 1) {
                    live[e] = false;
                    deg_row[i] -= 1;
                    deg_col[j] -= 1;
                    remaining -= 1;
                    stripped = true;
                }
            }
            if remaining == 0 {
                return true;
            }
            if !stripped {
                return false;
            }
        }
    }

    fn solve_pattern(
        pattern: &[(usize, usize)],
        marg: &MarginalPair,
        n: usize,
        m: usize,
    ) -> Option<Matrix> {
        // Peel leaves: a row or column incident to exactly one live cell
        // must absorb its remaining marginal.
        let mut plan = Matrix::zero(n, m);
        let mut remaining_mu = marg.mu.clone();
        let mut remaining_nu = marg.nu.clone();
        let mut live: Vec<bool> = vec![true; pattern.len()];
        let mut left = pattern.len();
        while left > 0 {
            let mut progressed = false;
            for e in 0..pattern.len() {
                if !live[e] {
                    continue;
                }
                let (i, j) = pattern[e];
                let row_deg = pattern
                    .iter()
                    .zip(&live)
                    .filter(|(&(r, _), &l)| l && r == i)
                    .count();
                let col_deg = pattern
                    .iter()
                    .zip(&live)
                    .filter(|(&(_, c), &l)| l && c == j)
                    .count();
                let value = if row_deg == 1 {
                    remaining_mu[i].clone()
                } else if col_deg == 1 {
                    remaining_nu[j].clone()
                } else {
                    continue;
                };
                if value.is_negative() {
                    return None;
                }
                plan.set(i, j, value.clone());
                remaining_mu[i] -= &value;
                remaining_nu[j] -= &value;
                live[e] = false;
                left -= 1;
                progressed = true;
            }
            if !progressed {
                return None; // cycle; should not happen for acyclic input
            }
        }
        // All marginals must be consumed (covers rows and columns that the
        // pattern never touches).
        if remaining_mu.iter().any(|v| !v.is_zero()) {
            return None;
        }
        if remaining_nu.iter().any(|v| !v.is_zero()) {
            return None;
        }
        Some(plan)
    }

    fn recurse(
        idx: usize,
        cells: &[(usize, usize)],
        pattern: &mut Vec<(usize, usize)>,
        max_size: usize,
        marg: &MarginalPair,
        n: usize,
        m: usize,
        found: &mut BTreeSet<Matrix>,
    ) {
        if acyclic(pattern, n, m) {
            if let Some(plan) = solve_pattern(pattern, marg, n, m) {
                found.insert(plan);
            }
        } else {
            return; // supersets of a cyclic pattern stay cyclic
        }
        if idx == cells.len() || pattern.len() == max_size {
            return;
        }
        for next in idx..cells.len() {
            pattern.push(cells[next]);
            recurse(next + 1, cells, pattern, max_size, marg, n, m, found);
            pattern.pop();
        }
    }

    recurse(0, &cells, &mut pattern, max_size, marg, n, m, &mut found);
    found.into_iter().collect()
}

/// Forward optimal value by brute force: the minimum vertex cost.
pub fn min_vertex_value(cost: &Matrix, vertices: &[Matrix]) -> Rational {
    vertices
        .iter()
        .map(|v| v.dot(cost))
        .min()
        .expect("nonempty vertex set")
}

/// Full-quadruple Monge check (the definition, not the adjacent-minor
/// shortcut).
pub fn is_monge_all_quadruples(cost: &Matrix) -> bool {
    let (n, m) = (cost.nrows(), cost.ncols());
    for i in 0..n {
        for r in (i + 1)..n {
            for j in 0..m {
                for s in (j + 1)..m {
                    if cost.get(i, j) + cost.get(r, s) > cost.get(i, s) + cost.get(r, j) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// LP oracle: exhaustive basic points
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum BruteLp {
    Optimal(Rational),
    Infeasible,
}

/// Minimum of `<objective, x>` over a *bounded* system by enumerating all
/// candidate basic points: solutions of every square subsystem formed by the
/// equalities plus a choice of tight inequalities. The optimum of a bounded
/// feasible LP is attained at such a point.
pub fn brute_force_lp_min(objective: &[Rational], sys: &LinearSystem) -> BruteLp {
    let dim = sys.dim;
    // Gather all hyperplanes: equalities (always active) and inequalities
    // (optionally active), with bounds rewritten as inequality rows.
    let mut optional: Vec<(Vec<Rational>, Rational)> = sys.ge.clone();
    for d in 0..dim {
        if let Some(l) = &sys.lower[d] {
            let mut row = vec![Rational::zero(); dim];
            row[d] = rat_int(1);
            optional.push((row, l.clone()));
        }
        if let Some(u) = &sys.upper[d] {
            let mut row = vec![Rational::zero(); dim];
            row[d] = -rat_int(1);
            optional.push((row, -u.clone()));
        }
    }
    let feasible = |x: &[Rational]| -> bool {
        sys.eq
            .iter()
            .all(|(row, rhs)| dot(row, x) == *rhs)
            && optional.iter().all(|(row, rhs)| dot(row, x) >= *rhs)
    };
    let mut best: Option<Rational> = None;
    let mut consider = |x: Vec<Rational>| {
        if feasible(&x) {
            let v = dot(objective, &x);
            best = Some(match &best {
                Some(b) if *b <= v => b.clone(),
                _ => v,
            });
        }
    };

    // Choose subsets of optional rows to complete the equalities to a
    // (generically) full-rank square system.
    let base: Vec<(Vec<Rational>, Rational)> = sys.eq.clone();
    let k = optional.len();
    let need_max = dim.saturating_sub(0);
    let mut chosen: Vec<usize> = Vec::new();
    fn subsets(
        start: usize,
        k: usize,
        need_max: usize,
        chosen: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        visit(chosen);
        if chosen.len() == need_max || start == k {
            return;
        }
        for next in start..k {
            chosen.push(next);
            subsets(next + 1, k, need_max, chosen, visit);
            chosen.pop();
        }
    }
    subsets(0, k, need_max, &mut chosen, &mut |subset: &[usize]| {
        let mut rows = base.clone();
        for &i in subset {
            rows.push(optional[i].clone());
        }
        if rows.len() < dim {
            return;
        }
        if let Some(x) = solve_unique(&rows, dim) {
            consider(x);
        }
    });
    match best {
        Some(v) => BruteLp::Optimal(v),
        None => BruteLp::Infeasible,
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unique solution of a (possibly overdetermined) linear system, if any.
fn solve_unique(rows: &[(Vec<Rational>, Rational)], dim: usize) -> Option<Vec<Rational>> {
    let mut aug: Vec<Vec<Rational>> = rows
        .iter()
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    // Gaussian elimination.
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..dim {
        let Some(p) = (row..aug.len()).find(|&r| !aug[r][col].is_zero()) else {
            continue;
        };
        aug.swap(row, p);
        let inv = aug[row][col].clone().recip();
        for v in aug[row].iter_mut() {
            *v *= &inv;
        }
        for r in 0..aug.len() {
            if r != row && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                let pivot_row = aug[row].clone();
                for (t, pv) in aug[r].iter_mut().zip(&pivot_row) {
                    *t -= &f * pv;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == aug.len() {
            break;
        }
    }
    if pivots.len() < dim {
        return None; // underdetermined
    }
    for r in &aug {
        if r[..dim].iter().all(|v| v.is_zero()) && !r[dim].is_zero() {
            return None; // inconsistent subsystem
        }
    }
    let mut x = vec![Rational::zero(); dim];
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = aug[r][dim].clone();
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// Proximal gradient LASSO (reference for the coordinate-descent path)
// ---------------------------------------------------------------------------

/// Standard LASSO `min |y - P x|^2 + lambda |x|_1` by ISTA with a step from
/// the largest eigenvalue of `P'P` (power iteration).
pub fn lasso_ista(rows: &[Vec<f64>], y: &[f64], lambda: f64, iterations: usize) -> Vec<f64> {
    let k = rows.len();
    let d = rows[0].len();
    // Largest eigenvalue of P'P by power iteration.
    let mut v = vec![1.0; d];
    for _ in 0..500 {
        let mut pv = vec![0.0; k];
        for (r, row) in rows.iter().enumerate() {
            pv[r] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let mut ptpv = vec![0.0; d];
        for (r, row) in rows.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                ptpv[j] += a * pv[r];
            }
        }
        let norm: f64 = ptpv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        v = ptpv.iter().map(|x| x / norm).collect();
    }
    let pv: Vec<f64> = rows
        .iter()
        .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum())
        .collect();
    let lip = 2.0 * pv.iter().map(|x| x * x).sum::<f64>().max(1e-12);
    let step = 1.0 / lip;

    let mut x = vec![0.0; d];
    for _ in 0..iterations {
        // Gradient of |y - Px|^2 is -2 P'(y - Px).
        let mut residual = vec![0.0; k];
        for (r, row) in rows.iter().enumerate() {
            let pred: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            residual[r] = y[r] - pred;
        }
        let mut grad = vec![0.0; d];
        for (r, row) in rows.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                grad[j] -= 2.0 * a * residual[r];
            }
        }
        for j in 0..d {
            let z = x[j] - step * grad[j];
            let t = step * lambda;
            x[j] = if z > t {
                z - t
            } else if z < -t {
                z + t
            } else {
                0.0
            };
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Restricted eigenvalue by grid search with local refinement
// ---------------------------------------------------------------------------

/// Grid-search minimum of `|Px|^2 / (K |x|^2)` over the cone
/// `|x_{S^c}|_1 <= 3 |x_S|_1` for 4-dimensional designs, refined locally by
/// shrinking coordinate steps on the angles.
pub fn rep_grid_search_2x2(rows: &[Vec<f64>], support: &[usize]) -> f64 {
    assert_eq!(rows[0].len(), 4, "grid oracle is specialized to 2x2");
    let k = rows.len() as f64;
    let mut in_support = [false; 4];
    for &s in support {
        in_support[s] = true;
    }
    let quad = |x: &[f64; 4]| -> f64 {
        let mut num = 0.0;
        for row in rows {
            let dot: f64 = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            num += dot * dot;
        }
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        num / (k * norm2)
    };
    let in_cone = |x: &[f64; 4]| -> bool {
        let mut on = 0.0;
        let mut off = 0.0;
        for (v, s) in x.iter().zip(in_support.iter()) {
            if *s {
                on += v.abs();
            } else {
                off += v.abs();
            }
        }
        off <= 3.0 * on + 1e-12
    };
    let to_point = |angles: &[f64; 3]| -> [f64; 4] {
        let (t1, t2, t3) = (angles[0], angles[1], angles[2]);
        [
            t1.cos(),
            t1.sin() * t2.cos(),
            t1.sin() * t2.sin() * t3.cos(),
            t1.sin() * t2.sin() * t3.sin(),
        ]
    };
    let steps = 60;
    let mut best_val = f64::INFINITY;
    let mut best_angles = [0.0; 3];
    for a in 0..steps {
        for b in 0..steps {
            for c in 0..(2 * steps) {
                let angles = [
                    std::f64::consts::PI * a as f64 / steps as f64,
                    std::f64::consts::PI * b as f64 / steps as f64,
                    std::f64::consts::PI * c as f64 / steps as f64,
                ];
                let x = to_point(&angles);
                if in_cone(&x) {
                    let v = quad(&x);
                    if v < best_val {
                        best_val = v;
                        best_angles = angles;
                    }
                }
            }
        }
    }
    // Local refinement: shrink per-angle steps around the best grid point.
    let mut step = std::f64::consts::PI / steps as f64;
    for _ in 0..40 {
        let mut improved = false;
        for axis in 0..3 {
            for dir in [-1.0, 1.0] {
                let mut trial = best_angles;
                trial[axis] += dir * step;
                let x = to_point(&trial);
                if in_cone(&x) {
                    let v = quad(&x);
                    if v < best_val {
                        best_val = v;
                        best_angles = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best_val
}

// ---------------------------------------------------------------------------
// Random instance generation (seeded)
// ---------------------------------------------------------------------------

/// Random marginal pair with integer weights in `1..=granularity`
/// (strictly positive entries).
pub fn random_marginals(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    granularity: i64,
) -> MarginalPair {
    let draw = |rng: &mut ChaCha8Rng, len: usize| {
        let w: Vec<i64> = (0..len).map(|_| rng.gen_range(1..=granularity)).collect();
        let total: i64 = w.iter().sum();
        w.into_iter()
            .map(|x| Rational::new(x.into(), total.into()))
            .collect::<Vec<_>>()
    };
    MarginalPair::new(draw(rng, n), draw(rng, m))
}

/// Random marginal pair that may contain zero entries (degenerate cases).
pub fn random_marginals_with_zeros(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    granularity: i64,
) -> MarginalPair {
    let draw = |rng: &mut ChaCha8Rng, len: usize| loop {
        let w: Vec<i64> = (0..len).map(|_| rng.gen_range(0..=granularity)).collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return w
                .into_iter()
                .map(|x| Rational::new(x.into(), total.into()))
                .collect::<Vec<_>>();
        }
    };
    MarginalPair::new(draw(rng, n), draw(rng, m))
}

/// Random rational cost matrix with entries `p/q`, `|p| <= bound`,
/// `1 <= q <= den_bound`.
pub fn random_cost(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    bound: i64,
    den_bound: i64,
) -> Matrix {
    Matrix::from_fn(n, m, |_, _| {
        Rational::new(
            rng.gen_range(-bound..=bound).into(),
            rng.gen_range(1..=den_bound).into(),
        )
    })
}

/// Random Monge cost built from sorted points and a convex function
/// `h(d) = d^2` (plus an optional affine tilt, which preserves the class).
pub fn random_monge_cost(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Matrix {
    let mut xs: Vec<i64> = (0..n).map(|_| rng.gen_range(-6..=6)).collect();
    let mut ys: Vec<i64> = (0..m).map(|_| rng.gen_range(-6..=6)).collect();
    xs.sort_unstable();
    ys.sort_unstable();
    Matrix::from_fn(n, m, |i, j| {
        let d = xs[i] - ys[j];
        rat_int(d * d)
    })
}

/// Deterministic generator for seeded tests.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

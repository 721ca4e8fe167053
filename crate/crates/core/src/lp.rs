//! Exact rational linear programming.
//!
//! Everything an identifiability theorem needs from an LP is decided here
//! with no floating point anywhere: feasibility, optimization, uniqueness of
//! the solution set (via per-coordinate bounds), ranks and kernels.
//!
//! The pivoting engine is a dense two-phase simplex with Bland's rule on
//! standard-form problems (`min c'x, Ax = b, x >= 0`). General systems with
//! free variables are first reduced by eliminating their equality constraints
//! exactly, then free directions are split into nonnegative pairs.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;
use crate::types::CoordRange;

// ---------------------------------------------------------------------------
// Rational linear algebra
// ---------------------------------------------------------------------------

/// Reduced row echelon form in place; returns the pivot columns.
/// The matrix may have more columns than `cols_for_pivots`; trailing columns
/// (e.g. an augmented right-hand side) are transformed but never pivoted on.
pub(crate) fn rref(mat: &mut [Vec<Rational>], cols_for_pivots: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols_for_pivots {
        if row >= mat.len() {
            break;
        }
        let Some(pivot_row) = (row..mat.len()).find(|&r| !mat[r][col].is_zero()) else {
            continue;
        };
        mat.swap(row, pivot_row);
        let inv = mat[row][col].recip();
        for v in mat[row].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        for r in 0..mat.len() {
            if r != row && !mat[r][col].is_zero() {
                let factor = mat[r][col].clone();
                let (pivot_slice, target) = if r < row {
                    let (a, b) = mat.split_at_mut(row);
                    (&b[0], &mut a[r])
                } else {
                    let (a, b) = mat.split_at_mut(r);
                    (&a[row], &mut b[0])
                };
                for (t, p) in target.iter_mut().zip(pivot_slice.iter()) {
                    if !p.is_zero() {
                        *t -= &factor * p;
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Exact rank of the span of the given vectors. Empty input has rank 0.
pub fn rank_of(vectors: &[Vec<Rational>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols = vectors[0].len();
    let mut mat: Vec<Vec<Rational>> = vectors.to_vec();
    rref(&mut mat, cols).len()
}

/// Exact basis of `{x : <row, x> = 0 for every row}`, canonically ordered by
/// ascending free column (reduced echelon back-substitution).
pub fn nullspace_basis(dim: usize, rows: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let mut mat: Vec<Vec<Rational>> = rows.to_vec();
    let pivots = rref(&mut mat, dim);
    let mut is_pivot = vec![false; dim];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in 0..dim {
        if is_pivot[free] {
            continue;
        }
        let mut v = vec![Rational::zero(); dim];
        v[free] = Rational::one();
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = -mat[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// Standard-form simplex
// ---------------------------------------------------------------------------

/// `min <cost, x>` subject to `rows * x = rhs`, `x >= 0`.
#[derive(Clone, Debug)]
pub struct StandardLp {
    pub ncols: usize,
    pub cost: Vec<Rational>,
    pub rows: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
}

#[derive(Clone, Debug)]
pub enum StandardOutcome {
    Optimal {
        x: Vec<Rational>,
        value: Rational,
        /// One dual multiplier per input row (zero for rows found redundant).
        duals: Vec<Rational>,
    },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// `rows x (n + m)` working matrix: structural columns then one initial
    /// identity column per original row (kept so that `B^{-1}` stays
    /// readable for the dual extraction).
    t: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    n_struct: usize,
    /// Original row index carried by each tableau row.
    row_ids: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.t[row][col].recip();
        if !inv.is_one() {
            for v in self.t[row].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.rhs[row] *= &inv;
        }
        for r in 0..self.t.len() {
            if r == row || self.t[r][col].is_zero() {
                continue;
            }
            let factor = self.t[r][col].clone();
            let (pivot_row, target, trhs) = {
                // Split borrows: the pivot row is immutable, target mutable.
                if r < row {
                    let (a, b) = self.t.split_at_mut(row);
                    (&b[0], &mut a[r], &mut self.rhs)
                } else {
                    let (a, b) = self.t.split_at_mut(r);
                    (&a[row], &mut b[0], &mut self.rhs)
                }
            };
            for (tv, pv) in target.iter_mut().zip(pivot_row.iter()) {
                if !pv.is_zero() {
                    *tv -= &factor * pv;
                }
            }
            let piv_rhs = trhs[row].clone();
            if !piv_rhs.is_zero() {
                trhs[r] -= &factor * &piv_rhs;
            }
        }
        self.basis[row] = col;
    }

    /// Reduced costs `c_j - c_B B^{-1} A_j` for the given cost vector
    /// (structural columns only; artificial columns are never candidates).
    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let basic_cost: Vec<Rational> = self
            .basis
            .iter()
            .map(|&b| {
                if b < self.n_struct {
                    cost[b].clone()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        (0..self.n_struct)
            .map(|j| {
                let mut r = cost[j].clone();
                for (i, bc) in basic_cost.iter().enumerate() {
                    if !bc.is_zero() && !self.t[i][j].is_zero() {
                        r -= bc * &self.t[i][j];
                    }
                }
                r
            })
            .collect()
    }

    /// Runs Bland-rule simplex on the current basis for the given structural
    /// cost vector. Returns false if unbounded.
    fn optimize(&mut self, cost: &[Rational]) -> bool {
        loop {
            let reduced = self.reduced_costs(cost);
            let entering = (0..self.n_struct).find(|&j| reduced[j].is_negative());
            let Some(col) = entering else {
                return true;
            };
            // Ratio test with Bland's tie-break on the leaving basic index.
            let mut best: Option<(Rational, usize, usize)> = None; // (ratio, basis var, row)
            for i in 0..self.t.len() {
                if self.t[i][col].is_positive() {
                    let ratio = &self.rhs[i] / &self.t[i][col];
                    let key = (ratio.clone(), self.basis[i]);
                    match &best {
                        Some((r, bvar, _)) if (r, *bvar) <= (&key.0, key.1) => {}
                        _ => best = Some((key.0, key.1, i)),
                    }
                }
            }
            let Some((_, _, row)) = best else {
                return false; // unbounded
            };
            self.pivot(row, col);
        }
    }
}

/// Two-phase simplex with Bland's anti-cycling rule over exact rationals.
pub fn solve_standard(lp: &StandardLp) -> StandardOutcome {
    let n = lp.ncols;
    let m = lp.rows.len();
    debug_assert!(lp.rows.iter().all(|r| r.len() == n));
    debug_assert_eq!(lp.cost.len(), n);

    // Orient rows so the right-hand side is nonnegative; remember the signs
    // for the dual extraction.
    let mut row_sign = vec![Rational::one(); m];
    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        let mut r: Vec<Rational> = row.clone();
        let mut b = lp.rhs[i].clone();
        if b.is_negative() {
            for v in r.iter_mut() {
                *v = -v.clone();
            }
            b = -b;
            row_sign[i] = -Rational::one();
        }
        // Artificial identity block.
        r.extend((0..m).map(|k| {
            if k == i {
                Rational::one()
            } else {
                Rational::zero()
            }
        }));
        t.push(r);
        rhs.push(b);
    }

    let mut tab = Tableau {
        t,
        rhs,
        basis: (n..n + m).collect(),
        n_struct: n,
        row_ids: (0..m).collect(),
    };

    // Phase 1: minimize the sum of artificials.
    if m > 0 {
        // Treat artificials as structural for phase 1 only.
        tab.n_struct = n + m;
        let mut phase1_cost = vec![Rational::zero(); n + m];
        for c in phase1_cost[n..].iter_mut() {
            *c = Rational::one();
        }
        let ok = tab.optimize(&phase1_cost);
        debug_assert!(ok, "phase 1 is always bounded");
        let infeas: Rational = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(&b, _)| b >= n)
            .map(|(_, v)| v.clone())
            .sum();
        if !infeas.is_zero() {
            return StandardOutcome::Infeasible;
        }
        tab.n_struct = n;
        // Drive remaining zero-valued artificials out of the basis.
        let mut row = 0;
        while row < tab.t.len() {
            if tab.basis[row] >= n {
                if let Some(col) = (0..n).find(|&j| !tab.t[row][j].is_zero()) {
                    tab.pivot(row, col);
                } else {
                    // Redundant original row: drop it.
                    tab.t.remove(row);
                    tab.rhs.remove(row);
                    tab.basis.remove(row);
                    tab.row_ids.remove(row);
                    continue;
                }
            }
            row += 1;
        }
    }

    // Phase 2.
    if !tab.optimize(&lp.cost) {
        return StandardOutcome::Unbounded;
    }

    let mut x = vec![Rational::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs[i].clone();
        }
    }
    let value = dot(&lp.cost, &x);
    // y = c_B B^{-1}: read from the artificial columns, which started as the
    // identity, then undo the row sign flips.
    let mut duals = vec![Rational::zero(); m];
    for &orig in tab.row_ids.iter() {
        let mut y = Rational::zero();
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < n && !lp.cost[b].is_zero() && !tab.t[r][n + orig].is_zero() {
                y += &lp.cost[b] * &tab.t[r][n + orig];
            }
        }
        duals[orig] = y * &row_sign[orig];
    }
    StandardOutcome::Optimal { x, value, duals }
}

// ---------------------------------------------------------------------------
// General systems
// ---------------------------------------------------------------------------

/// Mixed equality / `>=` system over `dim` free variables with optional
/// per-variable box bounds.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    pub dim: usize,
    /// `<row, x> = rhs`
    pub eq: Vec<(Vec<Rational>, Rational)>,
    /// `<row, x> >= rhs`
    pub ge: Vec<(Vec<Rational>, Rational)>,
    pub lower: Vec<Option<Rational>>,
    pub upper: Vec<Option<Rational>>,
}

impl LinearSystem {
    pub fn new(dim: usize) -> Self {
        LinearSystem {
            dim,
            eq: Vec::new(),
            ge: Vec::new(),
            lower: vec![None; dim],
            upper: vec![None; dim],
        }
    }

    pub fn push_eq(&mut self, row: Vec<Rational>, rhs: Rational) {
        debug_assert_eq!(row.len(), self.dim);
        self.eq.push((row, rhs));
    }

    pub fn push_ge(&mut self, row: Vec<Rational>, rhs: Rational) {
        debug_assert_eq!(row.len(), self.dim);
        self.ge.push((row, rhs));
    }

    /// Entrywise box `0 <= x <= c0` (the boundedness restriction available
    /// for otherwise unbounded cost systems).
    pub fn set_box(&mut self, c0: &Rational) {
        for d in 0..self.dim {
            self.lower[d] = Some(Rational::zero());
            self.upper[d] = Some(c0.clone());
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Debug)]
pub enum LpResult {
    Optimal { value: Rational, point: Vec<Rational> },
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolutionStatus {
    Infeasible,
    UniquePoint,
    Nonunique,
}

/// Exact description of the solution set of a [`LinearSystem`], computed by
/// bounding every coordinate from below and above.
#[derive(Clone, Debug)]
pub struct SolutionSetDescription {
    pub status: SolutionStatus,
    pub point: Option<Vec<Rational>>,
    /// Per-coordinate `[min, max]` over the solution set; `None` ends are
    /// unbounded. Present unless the system is infeasible.
    pub coordinate_ranges: Option<Vec<CoordRange>>,
}

/// Equality-eliminated form: the feasible set is
/// `{ x0 + V t : reduced_ge t >= reduced_rhs }` with `t` free of dimension
/// `basis.len()`.
struct Reduced {
    x0: Vec<Rational>,
    /// Basis vectors of the equality kernel, each of length `dim`.
    basis: Vec<Vec<Rational>>,
    /// Inequalities in `t`-space.
    ge: Vec<(Vec<Rational>, Rational)>,
}

enum Reduction {
    Ok(Reduced),
    Infeasible,
}

fn reduce(sys: &LinearSystem) -> Reduction {
    let dim = sys.dim;
    // Fold box bounds into inequality rows.
    let mut ge: Vec<(Vec<Rational>, Rational)> = sys.ge.clone();
    for d in 0..dim {
        if let Some(l) = &sys.lower[d] {
            let mut row = vec![Rational::zero(); dim];
            row[d] = Rational::one();
            ge.push((row, l.clone()));
        }
        if let Some(u) = &sys.upper[d] {
            let mut row = vec![Rational::zero(); dim];
            row[d] = -Rational::one();
            ge.push((row, -u.clone()));
        }
    }

    // Solve the equalities exactly.
    let (x0, basis) = if sys.eq.is_empty() {
        let mut basis = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut v = vec![Rational::zero(); dim];
            v[d] = Rational::one();
            basis.push(v);
        }
        (vec![Rational::zero(); dim], basis)
    } else {
        let mut aug: Vec<Vec<Rational>> = sys
            .eq
            .iter()
            .map(|(row, rhs)| {
                let mut r = row.clone();
                r.push(rhs.clone());
                r
            })
            .collect();
        let pivots = rref(&mut aug, dim);
        for row in &aug {
            if row[..dim].iter().all(|v| v.is_zero()) && !row[dim].is_zero() {
                return Reduction::Infeasible;
            }
        }
        let mut x0 = vec![Rational::zero(); dim];
        for (r, &p) in pivots.iter().enumerate() {
            x0[p] = aug[r][dim].clone();
        }
        let rows: Vec<Vec<Rational>> = sys.eq.iter().map(|(row, _)| row.clone()).collect();
        (x0, nullspace_basis(dim, &rows))
    };

    // Substitute into the inequalities.
    let mut reduced_ge = Vec::with_capacity(ge.len());
    for (row, rhs) in &ge {
        let coeffs: Vec<Rational> = basis.iter().map(|v| dot(row, v)).collect();
        let shifted = rhs - dot(row, &x0);
        if coeffs.iter().all(|c| c.is_zero()) {
            if shifted.is_positive() {
                return Reduction::Infeasible;
            }
            continue;
        }
        reduced_ge.push((coeffs, shifted));
    }
    Reduction::Ok(Reduced {
        x0,
        basis,
        ge: reduced_ge,
    })
}

/// Minimizes (or maximizes) `obj_t` over the reduced polyhedron.
fn solve_reduced(red: &Reduced, obj_t: &[Rational], sense: Sense) -> LpResult {
    let r = red.basis.len();
    debug_assert_eq!(obj_t.len(), r);
    // Standard form: t = p - q, one surplus per >= row.
    let n_ge = red.ge.len();
    let ncols = 2 * r + n_ge;
    let mut rows = Vec::with_capacity(n_ge);
    let mut rhs = Vec::with_capacity(n_ge);
    for (k, (coeffs, b)) in red.ge.iter().enumerate() {
        let mut row = Vec::with_capacity(ncols);
        row.extend(coeffs.iter().cloned());
        row.extend(coeffs.iter().map(|c| -c.clone()));
        row.extend((0..n_ge).map(|j| {
            if j == k {
                -Rational::one()
            } else {
                Rational::zero()
            }
        }));
        rows.push(row);
        rhs.push(b.clone());
    }
    let sign = match sense {
        Sense::Min => Rational::one(),
        Sense::Max => -Rational::one(),
    };
    let mut cost = Vec::with_capacity(ncols);
    cost.extend(obj_t.iter().map(|c| c * &sign));
    cost.extend(obj_t.iter().map(|c| -c * &sign));
    cost.extend((0..n_ge).map(|_| Rational::zero()));
    match solve_standard(&StandardLp {
        ncols,
        cost,
        rows,
        rhs,
    }) {
        StandardOutcome::Infeasible => LpResult::Infeasible,
        StandardOutcome::Unbounded => LpResult::Unbounded,
        StandardOutcome::Optimal { x, value, .. } => {
            let t: Vec<Rational> = (0..r).map(|d| &x[d] - &x[r + d]).collect();
            LpResult::Optimal {
                value: &value * &sign,
                point: t,
            }
        }
    }
}

fn lift(red: &Reduced, t: &[Rational]) -> Vec<Rational> {
    let mut x = red.x0.clone();
    for (coef, v) in t.iter().zip(&red.basis) {
        if !coef.is_zero() {
            for (xd, vd) in x.iter_mut().zip(v) {
                *xd += coef * vd;
            }
        }
    }
    x
}

/// Exact optimum of `<objective, x>` over the system.
pub fn solve_lp(objective: &[Rational], sys: &LinearSystem, sense: Sense) -> LpResult {
    assert_eq!(objective.len(), sys.dim, "objective dimension mismatch");
    let red = match reduce(sys) {
        Reduction::Infeasible => return LpResult::Infeasible,
        Reduction::Ok(r) => r,
    };
    let obj_t: Vec<Rational> = red.basis.iter().map(|v| dot(objective, v)).collect();
    match solve_reduced(&red, &obj_t, sense) {
        LpResult::Infeasible => LpResult::Infeasible,
        LpResult::Unbounded => LpResult::Unbounded,
        LpResult::Optimal { value, point } => {
            let x = lift(&red, &point);
            LpResult::Optimal {
                value: value + dot(objective, &red.x0),
                point: x,
            }
        }
    }
}

/// Exact phase-one feasibility result.
pub fn check_feasible(sys: &LinearSystem) -> Feasibility {
    match solve_lp(&vec![Rational::zero(); sys.dim], sys, Sense::Min) {
        LpResult::Optimal { point, .. } => Feasibility::Feasible(point),
        LpResult::Infeasible => Feasibility::Infeasible,
        LpResult::Unbounded => unreachable!("constant objective cannot be unbounded"),
    }
}

/// Coordinate-bound scan of the solution set: minimizes and maximizes every
/// coordinate (2 dim exact LPs, sharing a single equality elimination).
pub fn solution_set(sys: &LinearSystem) -> SolutionSetDescription {
    let red = match reduce(sys) {
        Reduction::Infeasible => {
            return SolutionSetDescription {
                status: SolutionStatus::Infeasible,
                point: None,
                coordinate_ranges: None,
            }
        }
        Reduction::Ok(r) => r,
    };
    // The reduced polyhedron can still be empty.
    if !red.ge.is_empty() {
        let probe = solve_reduced(&red, &vec![Rational::zero(); red.basis.len()], Sense::Min);
        if matches!(probe, LpResult::Infeasible) {
            return SolutionSetDescription {
                status: SolutionStatus::Infeasible,
                point: None,
                coordinate_ranges: None,
            };
        }
    }
    let mut ranges: Vec<CoordRange> = Vec::with_capacity(sys.dim);
    for d in 0..sys.dim {
        let obj_t: Vec<Rational> = red.basis.iter().map(|v| v[d].clone()).collect();
        if obj_t.iter().all(|c| c.is_zero()) {
            ranges.push((Some(red.x0[d].clone()), Some(red.x0[d].clone())));
            continue;
        }
        let x0_d = &red.x0[d];
        let lo = match solve_reduced(&red, &obj_t, Sense::Min) {
            LpResult::Optimal { value, .. } => Some(value + x0_d),
            LpResult::Unbounded => None,
            LpResult::Infeasible => {
                return SolutionSetDescription {
                    status: SolutionStatus::Infeasible,
                    point: None,
                    coordinate_ranges: None,
                }
            }
        };
        let hi = match solve_reduced(&red, &obj_t, Sense::Max) {
            LpResult::Optimal { value, .. } => Some(value + x0_d),
            LpResult::Unbounded => None,
            LpResult::Infeasible => unreachable!("feasibility already established"),
        };
        ranges.push((lo, hi));
    }
    let unique = ranges
        .iter()
        .all(|(lo, hi)| matches!((lo, hi), (Some(a), Some(b)) if a == b));
    if unique {
        let point: Vec<Rational> = ranges
            .iter()
            .map(|(lo, _)| lo.clone().unwrap())
            .collect();
        SolutionSetDescription {
            status: SolutionStatus::UniquePoint,
            point: Some(point),
            coordinate_ranges: Some(ranges),
        }
    } else {
        SolutionSetDescription {
            status: SolutionStatus::Nonunique,
            point: None,
            coordinate_ranges: Some(ranges),
        }
    }
}

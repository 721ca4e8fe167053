//! Domain value types shared by all modules: dense rational matrices,
//! marginal pairs, observation records and identifiability reports.
//!
//! Everything here is immutable after construction; all operations on these
//! types are pure functions.

use std::fmt;

use num_traits::Zero;

use crate::error::Error;
use crate::rational::{render_rational, Rational};

/// Dense matrix of exact rationals, row-major storage.
///
/// Used for cost matrices, transport plans and ambiguity directions alike.
/// Vectorized forms are column-major: `(m[0,0], m[1,0], ..., m[0,1], ...)`,
/// matching the variable order of every linear system built downstream.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, Error> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Builder for literal matrices in tests and fixtures.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.data
            .iter()
            .enumerate()
            .map(|(k, v)| (k / self.cols, k % self.cols, v))
    }

    /// Column-major vectorization.
    pub fn to_col_major(&self) -> Vec<Rational> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self.get(i, j).clone());
            }
        }
        v
    }

    pub fn from_col_major(rows: usize, cols: usize, v: &[Rational]) -> Result<Self, Error> {
        if v.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                rows * cols,
                v.len()
            )));
        }
        Ok(Matrix::from_fn(rows, cols, |i, j| v[j * rows + i].clone()))
    }

    pub fn row_sums(&self) -> Vec<Rational> {
        (0..self.rows)
            .map(|i| self.row(i).iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<Rational> {
        let mut sums = vec![Rational::zero(); self.cols];
        for (_, j, v) in self.entries() {
            sums[j] += v;
        }
        sums
    }

    /// Index pairs with strictly positive entries.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.entries()
            .filter(|(_, _, v)| v.is_positive())
            .map(|(i, j, _)| (i, j))
            .collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|v| !v.is_negative())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Matrix) -> Rational {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: &Rational) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(render_rational).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Pair of probability vectors on `N` and `M` points.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MarginalPair {
    pub mu: Vec<Rational>,
    pub nu: Vec<Rational>,
}

impl MarginalPair {
    pub fn new(mu: Vec<Rational>, nu: Vec<Rational>) -> Self {
        MarginalPair { mu, nu }
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn m(&self) -> usize {
        self.nu.len()
    }

    /// Simplex membership: entries nonnegative, each vector summing to one.
    pub fn check(&self) -> Result<(), String> {
        for (name, v) in [("mu", &self.mu), ("nu", &self.nu)] {
            if v.is_empty() {
                return Err(format!("{name} is empty"));
            }
            if v.iter().any(|x| x.is_negative()) {
                return Err(format!("{name} has a negative entry"));
            }
            let total: Rational = v.iter().sum();
            if total != Rational::one() {
                return Err(format!("{name} sums to {}, not 1", render_rational(&total)));
            }
        }
        Ok(())
    }
}

use num_traits::One;
use num_traits::Signed;

/// Marginals induced by a plan: row and column sums.
pub fn plan_marginals(plan: &Matrix) -> MarginalPair {
    MarginalPair::new(plan.row_sums(), plan.col_sums())
}

/// Membership of `plan` in the transportation polytope of `marg`:
/// nonnegative entries whose row/column sums reproduce the marginals exactly.
pub fn is_plan_for(plan: &Matrix, marg: &MarginalPair) -> bool {
    plan.nrows() == marg.n()
        && plan.ncols() == marg.m()
        && plan.is_nonnegative()
        && plan.row_sums() == marg.mu
        && plan.col_sums() == marg.nu
}

/// Structural class the unknown cost is declared to belong to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CostClass {
    General,
    Monge,
    /// Symmetric with zero diagonal (requires N = M).
    Sym0,
    /// Entrywise bounds 0 <= c <= C0.
    Box(Rational),
}

/// Dual potential pair; feasibility w.r.t. a cost `c` means
/// `f_i + g_j <= c[i,j]` for every cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PotentialPair {
    pub f: Vec<Rational>,
    pub g: Vec<Rational>,
}

impl PotentialPair {
    /// Outer sum `f (+) g` as a matrix.
    pub fn outer_sum(&self) -> Matrix {
        Matrix::from_fn(self.f.len(), self.g.len(), |i, j| &self.f[i] + &self.g[j])
    }

    pub fn dual_value(&self, marg: &MarginalPair) -> Rational {
        let fv: Rational = self.f.iter().zip(&marg.mu).map(|(a, b)| a * b).sum();
        let gv: Rational = self.g.iter().zip(&marg.nu).map(|(a, b)| a * b).sum();
        fv + gv
    }

    pub fn is_feasible_for(&self, cost: &Matrix) -> bool {
        self.f.len() == cost.nrows()
            && self.g.len() == cost.ncols()
            && cost
                .entries()
                .all(|(i, j, c)| &self.f[i] + &self.g[j] <= *c)
    }
}

/// One observation: marginals plus any subset of total cost, plan and
/// potentials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationRecord {
    pub marginals: MarginalPair,
    pub alpha: Option<Rational>,
    pub plan: Option<Matrix>,
    pub potentials: Option<PotentialPair>,
}

impl ObservationRecord {
    pub fn costs_only(marginals: MarginalPair, alpha: Rational) -> Self {
        ObservationRecord {
            marginals,
            alpha: Some(alpha),
            plan: None,
            potentials: None,
        }
    }

    /// Total cost, either observed directly or induced by the potentials.
    pub fn alpha_or_dual(&self) -> Option<Rational> {
        self.alpha.clone().or_else(|| {
            self.potentials
                .as_ref()
                .map(|p| p.dual_value(&self.marginals))
        })
    }
}

/// Set of `K` observation records with a declared cost class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationSet {
    pub records: Vec<ObservationRecord>,
    pub cost_class: CostClass,
}

/// A violated invariant found by [`validate_observation_set`]; data, not an
/// error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Record index, or `None` for set-level problems.
    pub record: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.record {
            Some(k) => write!(f, "record {}: {}", k, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Checks every type invariant of the observation set and returns the list of
/// violations (empty iff the set is well formed).
pub fn validate_observation_set(obs: &ObservationSet) -> Vec<Violation> {
    let mut out = Vec::new();
    if obs.records.is_empty() {
        out.push(Violation {
            record: None,
            message: "observation set is empty".into(),
        });
        return out;
    }
    let shape = |r: &ObservationRecord| {
        (
            r.alpha.is_some(),
            r.plan.is_some(),
            r.potentials.is_some(),
        )
    };
    let first_shape = shape(&obs.records[0]);
    let (n, m) = (obs.records[0].marginals.n(), obs.records[0].marginals.m());
    for (k, rec) in obs.records.iter().enumerate() {
        if let Err(msg) = rec.marginals.check() {
            out.push(Violation {
                record: Some(k),
                message: msg,
            });
        }
        if (rec.marginals.n(), rec.marginals.m()) != (n, m) {
            out.push(Violation {
                record: Some(k),
                message: format!(
                    "marginal sizes {}x{} differ from record 0 ({}x{})",
                    rec.marginals.n(),
                    rec.marginals.m(),
                    n,
                    m
                ),
            });
            continue;
        }
        if rec.alpha.is_none() && rec.plan.is_none() && rec.potentials.is_none() {
            out.push(Violation {
                record: Some(k),
                message: "record carries none of total cost, plan, potentials".into(),
            });
        }
        if shape(rec) != first_shape {
            out.push(Violation {
                record: Some(k),
                message: "records mix information modes (different fields populated)".into(),
            });
        }
        if let Some(plan) = &rec.plan {
            if plan.nrows() != n || plan.ncols() != m {
                out.push(Violation {
                    record: Some(k),
                    message: "plan shape does not match marginals".into(),
                });
            } else {
                if !plan.is_nonnegative() {
                    out.push(Violation {
                        record: Some(k),
                        message: "plan has a negative entry".into(),
                    });
                }
                if plan.row_sums() != rec.marginals.mu {
                    out.push(Violation {
                        record: Some(k),
                        message: "plan row sums differ from mu".into(),
                    });
                }
                if plan.col_sums() != rec.marginals.nu {
                    out.push(Violation {
                        record: Some(k),
                        message: "plan column sums differ from nu".into(),
                    });
                }
            }
        }
        if let Some(pot) = &rec.potentials {
            if pot.f.len() != n || pot.g.len() != m {
                out.push(Violation {
                    record: Some(k),
                    message: "potential lengths do not match marginals".into(),
                });
            }
            if let Some(alpha) = &rec.alpha {
                if pot.dual_value(&rec.marginals) != *alpha {
                    out.push(Violation {
                        record: Some(k),
                        message: "dual value of potentials differs from alpha".into(),
                    });
                }
            }
        }
    }
    if let CostClass::Sym0 = obs.cost_class {
        if n != m {
            out.push(Violation {
                record: None,
                message: format!("sym0 class requires square costs, got {n}x{m}"),
            });
        }
    }
    out
}

/// Outcome vocabulary of every identifiability procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The observations pin a unique cost matrix.
    Identifiable,
    /// Unique up to shift equivalence (plans-only setting).
    IdentifiableInQuotient,
    /// Several consistent costs exist; `ambiguity` describes them.
    Ambiguous,
    /// No cost matrix is consistent with the observations.
    Inconsistent,
    /// The combination sweep hit its cap before a verdict was reached.
    UndecidedCap,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Identifiable => "identifiable",
            Verdict::IdentifiableInQuotient => "identifiable_in_quotient",
            Verdict::Ambiguous => "ambiguous",
            Verdict::Inconsistent => "inconsistent",
            Verdict::UndecidedCap => "undecided_cap",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive coordinate range over the solution set; `None` bounds are
/// unbounded directions.
pub type CoordRange = (Option<Rational>, Option<Rational>);

/// Exact description of a non-singleton solution set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AmbiguityClass {
    /// One consistent cost matrix (a base point of the affine class), when
    /// one is known.
    pub base: Option<Matrix>,
    /// Basis of the shift subspace `{a (+) b}` when it is part of the class;
    /// listed separately from the remaining free directions.
    pub shift_basis: Vec<Matrix>,
    /// Free directions beyond shifts.
    pub free_directions: Vec<Matrix>,
    /// Per-cell ranges (column-major order) over the solution set, when the
    /// class was certified by coordinate bounds.
    pub coordinate_ranges: Option<Vec<CoordRange>>,
    /// Finitely many alternative exact solutions (combination-dependent
    /// outcomes of a sweep).
    pub candidates: Vec<Matrix>,
}

impl AmbiguityClass {
    pub fn free_dimension(&self) -> usize {
        self.free_directions.len()
    }
}

/// Result of an identifiability procedure.
#[derive(Clone, Debug)]
pub struct IdentifiabilityReport {
    pub verdict: Verdict,
    pub recovered_cost: Option<Matrix>,
    pub ambiguity: Option<AmbiguityClass>,
    /// The residual dimension `S` for plans-only settings.
    pub residual_dimension: Option<usize>,
    pub diagnostics: Vec<String>,
}

impl IdentifiabilityReport {
    pub fn identifiable(cost: Matrix) -> Self {
        IdentifiabilityReport {
            verdict: Verdict::Identifiable,
            recovered_cost: Some(cost),
            ambiguity: None,
            residual_dimension: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn inconsistent() -> Self {
        IdentifiabilityReport {
            verdict: Verdict::Inconsistent,
            recovered_cost: None,
            ambiguity: None,
            residual_dimension: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn ambiguous(ambiguity: AmbiguityClass) -> Self {
        IdentifiabilityReport {
            verdict: Verdict::Ambiguous,
            recovered_cost: None,
            ambiguity: Some(ambiguity),
            residual_dimension: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn note(mut self, line: impl Into<String>) -> Self {
        self.diagnostics.push(line.into());
        self
    }
}

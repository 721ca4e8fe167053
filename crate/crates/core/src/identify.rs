//! Identifiability procedures, one per information regime: totals only,
//! potentials, plans only, totals plus plans, full information, and the
//! symmetric zero-diagonal variants. Each consumes an [`ObservationSet`] and
//! produces an [`IdentifiabilityReport`] with an exact verdict.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::Error;
use crate::forward::{northwest_monotone_plan, solve_forward};
use crate::lp::{
    nullspace_basis, rank_of, rref, solution_set, LinearSystem, SolutionSetDescription,
    SolutionStatus,
};
use crate::polytope::{enumerate_extreme_points, minimal_face, EnumLimits, ExtremePointSet, Face};
use crate::rational::{render_rational, Rational};
use crate::types::{
    validate_observation_set, AmbiguityClass, CoordRange, CostClass, IdentifiabilityReport,
    MarginalPair, Matrix, ObservationRecord, ObservationSet, Verdict,
};

/// Tuning knobs shared by the identifiability procedures.
#[derive(Clone, Debug)]
pub struct IdentifyOptions {
    pub limits: EnumLimits,
    /// Combination sweeps stop after this many systems and report
    /// `undecided_cap` unless ambiguity was already certified.
    pub combination_cap: u64,
    /// Replace the full inequality set by the reduced set from the maximal
    /// faces above each observed face. Off by default; results must match.
    pub reduce_constraints: bool,
    /// Ablation: treat each observed plan as if only an extreme point of its
    /// minimal face had been observed (the least informative reading).
    pub vertex_only: bool,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        IdentifyOptions {
            limits: EnumLimits::default(),
            combination_cap: 1_000_000,
            reduce_constraints: false,
            vertex_only: false,
        }
    }
}

/// Iterates the product space of one candidate index per record.
pub(crate) struct CombinationCursor {
    sizes: Vec<usize>,
    current: Vec<usize>,
    started: bool,
    exhausted: bool,
}

impl CombinationCursor {
    pub(crate) fn new(sizes: Vec<usize>) -> Self {
        let exhausted = sizes.iter().any(|&s| s == 0);
        CombinationCursor {
            current: vec![0; sizes.len()],
            sizes,
            started: false,
            exhausted,
        }
    }
}

impl Iterator for CombinationCursor {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.exhausted {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.current.clone());
        }
        for k in (0..self.sizes.len()).rev() {
            self.current[k] += 1;
            if self.current[k] < self.sizes[k] {
                return Some(self.current.clone());
            }
            self.current[k] = 0;
        }
        self.exhausted = true;
        None
    }
}

fn cell(i: usize, j: usize, n: usize) -> usize {
    j * n + i
}

/// Appends the linear constraints of a declared cost class to the system
/// over column-major cost variables.
fn append_class_constraints(sys: &mut LinearSystem, class: &CostClass, n: usize, m: usize) {
    match class {
        CostClass::General => {}
        CostClass::Box(c0) => sys.set_box(c0),
        CostClass::Monge => {
            // Adjacent submodularity inequalities:
            // c[i,j+1] + c[i+1,j] - c[i,j] - c[i+1,j+1] >= 0.
            for i in 0..n.saturating_sub(1) {
                for j in 0..m.saturating_sub(1) {
                    let mut row = vec![Rational::zero(); n * m];
                    row[cell(i, j + 1, n)] = Rational::one();
                    row[cell(i + 1, j, n)] = Rational::one();
                    row[cell(i, j, n)] = -Rational::one();
                    row[cell(i + 1, j + 1, n)] = -Rational::one();
                    sys.push_ge(row, Rational::zero());
                }
            }
        }
        CostClass::Sym0 => {
            for i in 0..n {
                let mut row = vec![Rational::zero(); n * m];
                row[cell(i, i, n)] = Rational::one();
                sys.push_eq(row, Rational::zero());
            }
            for i in 0..n {
                for j in (i + 1)..m {
                    let mut row = vec![Rational::zero(); n * m];
                    row[cell(i, j, n)] = Rational::one();
                    row[cell(j, i, n)] = -Rational::one();
                    sys.push_eq(row, Rational::zero());
                }
            }
        }
    }
}

struct EpCache<'a> {
    limits: &'a EnumLimits,
    cache: BTreeMap<MarginalPair, ExtremePointSet>,
}

impl<'a> EpCache<'a> {
    fn new(limits: &'a EnumLimits) -> Self {
        EpCache {
            limits,
            cache: BTreeMap::new(),
        }
    }

    fn get(&mut self, marg: &MarginalPair) -> Result<&ExtremePointSet, Error> {
        if !self.cache.contains_key(marg) {
            let eps = enumerate_extreme_points(marg, self.limits)?;
            self.cache.insert(marg.clone(), eps);
        }
        Ok(&self.cache[marg])
    }
}

fn require_valid(obs: &ObservationSet) -> Result<(usize, usize), Error> {
    let violations = validate_observation_set(obs);
    if !violations.is_empty() {
        let listed: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidObservations(listed.join("; ")));
    }
    Ok((obs.records[0].marginals.n(), obs.records[0].marginals.m()))
}

/// Merges records that share a pair of marginals: the merged plan is the
/// average of the group's plans (which spans the join of their minimal
/// faces), the total cost must agree across the group, and the first
/// record's potentials are kept.
pub fn merge_repeated_marginals(obs: &ObservationSet) -> Result<ObservationSet, Error> {
    let mut order: Vec<MarginalPair> = Vec::new();
    let mut groups: BTreeMap<MarginalPair, Vec<usize>> = BTreeMap::new();
    for (k, rec) in obs.records.iter().enumerate() {
        let entry = groups.entry(rec.marginals.clone()).or_insert_with(|| {
            order.push(rec.marginals.clone());
            Vec::new()
        });
        entry.push(k);
    }
    let mut records = Vec::with_capacity(order.len());
    for marg in order {
        let members = &groups[&marg];
        let first = &obs.records[members[0]];
        let mut alpha = first.alpha.clone();
        for &k in &members[1..] {
            match (&alpha, &obs.records[k].alpha) {
                (Some(a), Some(b)) if a != b => {
                    return Err(Error::ConflictingTotals {
                        first: members[0],
                        second: k,
                    })
                }
                (None, Some(b)) => alpha = Some(b.clone()),
                _ => {}
            }
        }
        let plans: Vec<&Matrix> = members
            .iter()
            .filter_map(|&k| obs.records[k].plan.as_ref())
            .collect();
        let plan = if plans.is_empty() {
            None
        } else {
            let count = Rational::from_integer(plans.len().into());
            let mut sum = plans[0].clone();
            for p in &plans[1..] {
                sum = sum.add(p);
            }
            Some(sum.scale(&count.recip()))
        };
        records.push(ObservationRecord {
            marginals: marg,
            alpha,
            plan,
            potentials: first.potentials.clone(),
        });
    }
    Ok(ObservationSet {
        records,
        cost_class: obs.cost_class.clone(),
    })
}

// ---------------------------------------------------------------------------
// Combination sweeps (totals only / potentials)
// ---------------------------------------------------------------------------

enum SweepVerdict {
    Identifiable(Vec<Rational>),
    DistinctPoints(Vec<Vec<Rational>>),
    NonuniqueCombination(SolutionSetDescription),
    AllInfeasible,
    Capped {
        tried: u64,
        feasible_points: Vec<Vec<Rational>>,
    },
}

/// Scans all combinations of one candidate vertex per record. `extend`
/// receives the chosen candidate indices and pushes the combination-specific
/// equality constraints onto a clone of `base`.
///
/// A non-unique feasible combination, or two combinations with different
/// unique points, certify genuine ambiguity (every solution of one full
/// per-combination system is a consistent cost), so the scan can stop early;
/// `identifiable` and `inconsistent` both require the exhaustive scan.
fn sweep(
    base: &LinearSystem,
    candidate_counts: &[usize],
    cap: u64,
    mut extend: impl FnMut(&mut LinearSystem, &[usize]),
) -> SweepVerdict {
    let cursor = CombinationCursor::new(candidate_counts.to_vec());
    let mut points: Vec<Vec<Rational>> = Vec::new();
    let mut tried: u64 = 0;
    for combo in cursor {
        if tried >= cap {
            return SweepVerdict::Capped {
                tried,
                feasible_points: points,
            };
        }
        tried += 1;
        let mut sys = base.clone();
        extend(&mut sys, &combo);
        let desc = solution_set(&sys);
        match desc.status {
            SolutionStatus::Infeasible => {}
            SolutionStatus::UniquePoint => {
                let p = desc.point.expect("unique point present");
                if !points.contains(&p) {
                    points.push(p);
                    if points.len() > 1 {
                        return SweepVerdict::DistinctPoints(points);
                    }
                }
            }
            SolutionStatus::Nonunique => {
                return SweepVerdict::NonuniqueCombination(desc);
            }
        }
    }
    match points.len() {
        0 => SweepVerdict::AllInfeasible,
        1 => SweepVerdict::Identifiable(points.into_iter().next().unwrap()),
        _ => unreachable!("distinct points exit early"),
    }
}

fn ranges_to_ambiguity(desc: &SolutionSetDescription) -> AmbiguityClass {
    AmbiguityClass {
        coordinate_ranges: desc.coordinate_ranges.clone(),
        ..AmbiguityClass::default()
    }
}

fn sweep_report(
    verdict: SweepVerdict,
    n: usize,
    m: usize,
    check_name: &str,
) -> IdentifiabilityReport {
    match verdict {
        SweepVerdict::Identifiable(p) => {
            let cost = Matrix::from_col_major(n, m, &p).expect("dimension");
            IdentifiabilityReport::identifiable(cost).note(format!(
                "{check_name}: every feasible combination yields this point"
            ))
        }
        SweepVerdict::AllInfeasible => IdentifiabilityReport::inconsistent()
            .note(format!("{check_name}: every combination is infeasible")),
        SweepVerdict::NonuniqueCombination(desc) => {
            IdentifiabilityReport::ambiguous(ranges_to_ambiguity(&desc)).note(format!(
                "{check_name}: a feasible combination has a non-unique solution set"
            ))
        }
        SweepVerdict::DistinctPoints(points) => {
            let candidates: Vec<Matrix> = points
                .iter()
                .map(|p| Matrix::from_col_major(n, m, p).expect("dimension"))
                .collect();
            let amb = AmbiguityClass {
                base: Some(candidates[0].clone()),
                candidates,
                ..AmbiguityClass::default()
            };
            IdentifiabilityReport::ambiguous(amb).note(format!(
                "{check_name}: feasible combinations disagree; all distinct solutions listed"
            ))
        }
        SweepVerdict::Capped {
            tried,
            feasible_points,
        } => IdentifiabilityReport {
            verdict: Verdict::UndecidedCap,
            recovered_cost: None,
            ambiguity: None,
            residual_dimension: None,
            diagnostics: vec![format!(
                "{check_name}: combination cap reached after {tried} systems \
                 ({} feasible unique point(s) so far); verdict undecided",
                feasible_points.len()
            )],
        },
    }
}

/// Deduplicates records with identical marginals for totals-only procedures;
/// conflicting totals on the same marginals are immediately inconsistent.
fn dedup_totals(
    obs: &ObservationSet,
) -> Result<Vec<(MarginalPair, Rational)>, IdentifiabilityReport> {
    let mut seen: BTreeMap<MarginalPair, Rational> = BTreeMap::new();
    let mut out = Vec::new();
    for rec in &obs.records {
        let alpha = rec
            .alpha_or_dual()
            .expect("validated records carry a total");
        match seen.get(&rec.marginals) {
            Some(existing) if *existing != alpha => {
                return Err(IdentifiabilityReport::inconsistent()
                    .note("two records share marginals but report different total costs"));
            }
            Some(_) => {}
            None => {
                seen.insert(rec.marginals.clone(), alpha.clone());
                out.push((rec.marginals.clone(), alpha));
            }
        }
    }
    Ok(out)
}

fn require_totals(obs: &ObservationSet) -> Result<(), Error> {
    if obs.records.iter().any(|r| r.alpha_or_dual().is_none()) {
        return Err(Error::InvalidObservations(
            "every record needs a total cost for this procedure".into(),
        ));
    }
    Ok(())
}

/// Identifiability from totals alone: sweeps every combination of one
/// optimal vertex per record; the verdict is `identifiable` iff every
/// feasible combination pins the same unique cost.
pub fn identify_costs_only(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    require_totals(obs)?;
    let records = match dedup_totals(obs) {
        Ok(r) => r,
        Err(report) => return Ok(report),
    };
    let mut cache = EpCache::new(&opts.limits);
    let mut vertex_lists: Vec<Vec<Vec<Rational>>> = Vec::new();
    let mut alphas: Vec<Rational> = Vec::new();
    let mut base = LinearSystem::new(n * m);
    for (marg, alpha) in &records {
        let eps = cache.get(marg)?;
        let vecs: Vec<Vec<Rational>> = eps.vertices.iter().map(|v| v.to_col_major()).collect();
        // Every vertex is at least as expensive as the optimal value.
        for v in &vecs {
            base.push_ge(v.clone(), alpha.clone());
        }
        vertex_lists.push(vecs);
        alphas.push(alpha.clone());
    }
    append_class_constraints(&mut base, &obs.cost_class, n, m);
    let counts: Vec<usize> = vertex_lists.iter().map(Vec::len).collect();
    let verdict = sweep(&base, &counts, opts.combination_cap, |sys, combo| {
        for (k, &choice) in combo.iter().enumerate() {
            sys.push_eq(vertex_lists[k][choice].clone(), alphas[k].clone());
        }
    });
    Ok(sweep_report(verdict, n, m, "totals-only sweep"))
}

/// The equality-only sufficient condition: same sweep with the vertex
/// inequalities dropped. Existence of a consistent cost is assumed, so a
/// negative outcome is "not decidable", never a certificate of ambiguity or
/// inconsistency of the instance.
pub fn identify_costs_only_equality_sufficient(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    require_totals(obs)?;
    let records = match dedup_totals(obs) {
        Ok(r) => r,
        Err(report) => return Ok(report),
    };
    let mut cache = EpCache::new(&opts.limits);
    let mut vertex_lists: Vec<Vec<Vec<Rational>>> = Vec::new();
    let mut alphas: Vec<Rational> = Vec::new();
    for (marg, alpha) in &records {
        let eps = cache.get(marg)?;
        vertex_lists.push(eps.vertices.iter().map(|v| v.to_col_major()).collect());
        alphas.push(alpha.clone());
    }
    let base = LinearSystem::new(n * m);
    let counts: Vec<usize> = vertex_lists.iter().map(Vec::len).collect();
    let verdict = sweep(&base, &counts, opts.combination_cap, |sys, combo| {
        for (k, &choice) in combo.iter().enumerate() {
            sys.push_eq(vertex_lists[k][choice].clone(), alphas[k].clone());
        }
    });
    let mut report = sweep_report(verdict, n, m, "equality-only sufficient check");
    report.diagnostics.push(
        "equality-only check assumes a consistent cost exists; vertex inequalities \
         and class constraints are not enforced"
            .into(),
    );
    if report.verdict != Verdict::Identifiable {
        report.verdict = Verdict::Ambiguous;
        report
            .diagnostics
            .push("not decidable by the equality-only sufficient condition".into());
    }
    Ok(report)
}

fn report_from_desc(desc: SolutionSetDescription, n: usize, m: usize) -> IdentifiabilityReport {
    match desc.status {
        SolutionStatus::Infeasible => IdentifiabilityReport::inconsistent(),
        SolutionStatus::UniquePoint => {
            let p = desc.point.expect("unique point present");
            IdentifiabilityReport::identifiable(
                Matrix::from_col_major(n, m, &p).expect("dimension"),
            )
        }
        SolutionStatus::Nonunique => IdentifiabilityReport::ambiguous(ranges_to_ambiguity(&desc)),
    }
}

/// Monge corollary for totals: the monotone plan is known optimal, so a
/// single system (with the Monge inequalities appended) decides.
pub fn identify_costs_monge(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    require_totals(obs)?;
    let records = match dedup_totals(obs) {
        Ok(r) => r,
        Err(report) => return Ok(report),
    };
    let mut cache = EpCache::new(&opts.limits);
    let mut sys = LinearSystem::new(n * m);
    for (marg, alpha) in &records {
        let eps = cache.get(marg)?;
        let monotone = northwest_monotone_plan(marg);
        let mono_idx = eps
            .position(&monotone)
            .expect("the monotone plan is an extreme point");
        for (idx, v) in eps.vertices.iter().enumerate() {
            if idx == mono_idx {
                sys.push_eq(v.to_col_major(), alpha.clone());
            } else {
                sys.push_ge(v.to_col_major(), alpha.clone());
            }
        }
    }
    append_class_constraints(&mut sys, &CostClass::Monge, n, m);
    Ok(report_from_desc(solution_set(&sys), n, m)
        .note("single system with the monotone plan optimal per record"))
}

fn push_potential_constraints(
    sys: &mut LinearSystem,
    rec: &ObservationRecord,
    n: usize,
    m: usize,
) {
    let pot = rec.potentials.as_ref().expect("potentials required");
    for i in 0..n {
        for j in 0..m {
            let mut row = vec![Rational::zero(); n * m];
            row[cell(i, j, n)] = Rational::one();
            sys.push_ge(row, &pot.f[i] + &pot.g[j]);
        }
    }
}

fn push_support_equalities(
    sys: &mut LinearSystem,
    rec: &ObservationRecord,
    support_plan: &Matrix,
    n: usize,
) {
    let pot = rec.potentials.as_ref().expect("potentials required");
    for (i, j) in support_plan.support() {
        let mut row = vec![Rational::zero(); sys.dim];
        row[cell(i, j, n)] = Rational::one();
        sys.push_eq(row, &pot.f[i] + &pot.g[j]);
    }
}

fn require_potentials(obs: &ObservationSet) -> Result<(), Error> {
    if obs.records.iter().any(|r| r.potentials.is_none()) {
        return Err(Error::InvalidObservations(
            "potentials are required for this procedure".into(),
        ));
    }
    Ok(())
}

/// Identifiability from potentials (totals induced by the dual values):
/// combination sweep with the tighter per-combination system
/// `c >= f (+) g` and equality on the support of the chosen vertex.
pub fn identify_potentials(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    require_potentials(obs)?;
    let mut cache = EpCache::new(&opts.limits);
    let mut base = LinearSystem::new(n * m);
    let mut vertex_lists: Vec<Vec<Matrix>> = Vec::new();
    let mut alphas: Vec<Rational> = Vec::new();
    for rec in &obs.records {
        let alpha = rec.alpha_or_dual().expect("potentials present");
        let eps = cache.get(&rec.marginals)?;
        for v in &eps.vertices {
            base.push_ge(v.to_col_major(), alpha.clone());
        }
        push_potential_constraints(&mut base, rec, n, m);
        vertex_lists.push(eps.vertices.clone());
        alphas.push(alpha);
    }
    append_class_constraints(&mut base, &obs.cost_class, n, m);
    let counts: Vec<usize> = vertex_lists.iter().map(Vec::len).collect();
    let records = &obs.records;
    let verdict = sweep(&base, &counts, opts.combination_cap, |sys, combo| {
        for (k, &choice) in combo.iter().enumerate() {
            let u = &vertex_lists[k][choice];
            sys.push_eq(u.to_col_major(), alphas[k].clone());
            push_support_equalities(sys, &records[k], u, n);
        }
    });
    Ok(sweep_report(verdict, n, m, "potentials sweep"))
}

/// Monge corollary for potentials: single system with the monotone plan as
/// the optimal vertex of every record.
pub fn identify_potentials_monge(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    require_potentials(obs)?;
    let mut cache = EpCache::new(&opts.limits);
    let mut sys = LinearSystem::new(n * m);
    for rec in &obs.records {
        let alpha = rec.alpha_or_dual().expect("potentials present");
        let eps = cache.get(&rec.marginals)?;
        let monotone = northwest_monotone_plan(&rec.marginals);
        let mono_idx = eps
            .position(&monotone)
            .expect("the monotone plan is an extreme point");
        for (idx, v) in eps.vertices.iter().enumerate() {
            if idx == mono_idx {
                sys.push_eq(v.to_col_major(), alpha.clone());
            } else {
                sys.push_ge(v.to_col_major(), alpha.clone());
            }
        }
        push_potential_constraints(&mut sys, rec, n, m);
        push_support_equalities(&mut sys, rec, &monotone, n);
    }
    append_class_constraints(&mut sys, &CostClass::Monge, n, m);
    Ok(report_from_desc(solution_set(&sys), n, m)
        .note("single system with the monotone plan optimal per record"))
}

/// Sufficient support-cover condition for Monge identifiability from
/// potentials: every cell `(i,j)` must satisfy the strict cumulative-sum
/// overlap `max(A_{i-1}, B_{j-1}) < min(A_i, B_j)` for some record.
pub fn monge_support_cover_sufficient(marginals: &[MarginalPair]) -> bool {
    if marginals.is_empty() {
        return false;
    }
    let (n, m) = (marginals[0].n(), marginals[0].m());
    let cum = |v: &[Rational]| {
        let mut acc = Rational::zero();
        let mut out = vec![Rational::zero()];
        for x in v {
            acc += x;
            out.push(acc.clone());
        }
        out
    };
    let sums: Vec<(Vec<Rational>, Vec<Rational>)> = marginals
        .iter()
        .map(|mp| (cum(&mp.mu), cum(&mp.nu)))
        .collect();
    for i in 0..n {
        for j in 0..m {
            let covered = sums.iter().any(|(a, b)| {
                let lo = a[i].clone().max(b[j].clone());
                let hi = a[i + 1].clone().min(b[j + 1].clone());
                lo < hi
            });
            if !covered {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Plans only
// ---------------------------------------------------------------------------

/// Canonical basis of the shift subspace `{a (+) b}` (dimension N + M - 1).
fn shift_subspace_basis(n: usize, m: usize) -> Vec<Matrix> {
    let mut basis = Vec::with_capacity(n + m - 1);
    for i in 0..n {
        basis.push(Matrix::from_fn(n, m, |r, _| {
            if r == i {
                Rational::one()
            } else {
                Rational::zero()
            }
        }));
    }
    for j in 0..m.saturating_sub(1) {
        basis.push(Matrix::from_fn(n, m, |_, c| {
            if c == j {
                Rational::one()
            } else {
                Rational::zero()
            }
        }));
    }
    basis
}

/// Observed faces per record: the minimal face of the plan, or a single
/// canonical vertex of it in `vertex_only` mode.
fn observed_faces(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
    cache: &mut EpCache,
) -> Result<Vec<(ObservationRecord, Face)>, Error> {
    let mut out = Vec::with_capacity(obs.records.len());
    for rec in &obs.records {
        let plan = rec.plan.as_ref().ok_or_else(|| {
            Error::InvalidObservations("a transport plan is required per record".into())
        })?;
        let eps = cache.get(&rec.marginals)?;
        let mut face = minimal_face(plan, eps)?;
        let mut rec = rec.clone();
        if opts.vertex_only {
            let first = face.vertex_indices[0];
            face = Face {
                vertex_indices: vec![first],
                dimension: 0,
            };
            // The observed plan is replaced by the vertex itself.
            rec.plan = Some(eps.vertices[first].clone());
        }
        out.push((rec, face));
    }
    Ok(out)
}

fn difference_rows(
    faces: &[(ObservationRecord, Face)],
    cache: &mut EpCache,
) -> Result<Vec<Vec<Rational>>, Error> {
    let mut rows = Vec::new();
    for (rec, face) in faces {
        let plan_vec = rec.plan.as_ref().expect("plan present").to_col_major();
        let eps = cache.get(&rec.marginals)?;
        for &idx in &face.vertex_indices {
            let u = eps.vertices[idx].to_col_major();
            let diff: Vec<Rational> = plan_vec.iter().zip(&u).map(|(a, b)| a - b).collect();
            if diff.iter().any(|v| !v.is_zero()) {
                rows.push(diff);
            }
        }
    }
    Ok(rows)
}

/// Identifiability from plans alone, up to shift equivalence: the difference
/// vectors `pi - u` over the observed minimal faces span a subspace of
/// dimension `(N-1)(M-1) - S`; the cost lies in their kernel, which splits
/// into the shift subspace plus `S` extra free directions.
pub fn identify_plans_only(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    let merged = merge_repeated_marginals(obs)?;
    let mut cache = EpCache::new(&opts.limits);
    let faces = observed_faces(&merged, opts, &mut cache)?;
    let rows = difference_rows(&faces, &mut cache)?;
    let rank = rank_of(&rows);
    let free_dim = (n - 1) * (m - 1);
    let s = free_dim - rank;

    let kernel = nullspace_basis(n * m, &rows);
    let shift_basis = shift_subspace_basis(n, m);
    let mut span: Vec<Vec<Rational>> = shift_basis.iter().map(|b| b.to_col_major()).collect();
    let mut span_rank = rank_of(&span);
    let mut extras: Vec<Matrix> = Vec::new();
    for kv in kernel {
        span.push(kv.clone());
        let new_rank = rank_of(&span);
        if new_rank > span_rank {
            span_rank = new_rank;
            extras.push(Matrix::from_col_major(n, m, &kv)?);
        } else {
            span.pop();
        }
    }
    debug_assert_eq!(extras.len(), s, "kernel splits into shifts plus S directions");

    let ambiguity = AmbiguityClass {
        base: Some(Matrix::zero(n, m)),
        shift_basis,
        free_directions: extras,
        coordinate_ranges: None,
        candidates: Vec::new(),
    };
    let mut report = IdentifiabilityReport {
        verdict: if s == 0 {
            Verdict::IdentifiableInQuotient
        } else {
            Verdict::Ambiguous
        },
        recovered_cost: if s == 0 {
            Some(Matrix::zero(n, m))
        } else {
            None
        },
        ambiguity: Some(ambiguity),
        residual_dimension: Some(s),
        diagnostics: vec![format!(
            "difference span has dimension {rank} of {free_dim}; S = {s}"
        )],
    };
    if s == 0 {
        report
            .diagnostics
            .push("cost is shift-equivalent to the zero matrix".into());
    } else {
        if s == 1 {
            report.diagnostics.push(
                "S = 1: cost determined up to shift equivalence and a positive scalar".into(),
            );
        }
        report
            .diagnostics
            .push("no stronger conclusion possible from the observed faces".into());
    }
    Ok(report)
}

/// Strict upper-triangle fold `[utr + ltr] x` of a column-major N x N vector.
fn fold_symmetric(vec: &[Rational], n: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(&vec[cell(i, j, n)] + &vec[cell(j, i, n)]);
        }
    }
    out
}

fn lift_symmetric(tri: &[Rational], n: usize) -> Matrix {
    let mut mat = Matrix::zero(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            mat.set(i, j, tri[k].clone());
            mat.set(j, i, tri[k].clone());
            k += 1;
        }
    }
    mat
}

/// Plans-only identifiability inside the symmetric zero-diagonal class.
/// Shifts are trivial there, so `S = 0` pins the cost completely.
pub fn identify_plans_only_sym(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    if n != m {
        return Err(Error::DimensionMismatch(
            "symmetric class requires square cost matrices".into(),
        ));
    }
    let merged = merge_repeated_marginals(obs)?;
    let mut cache = EpCache::new(&opts.limits);
    let faces = observed_faces(&merged, opts, &mut cache)?;
    let rows = difference_rows(&faces, &mut cache)?;
    let folded: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| fold_symmetric(r, n))
        .filter(|r| r.iter().any(|v| !v.is_zero()))
        .collect();
    let tri_dim = n * (n - 1) / 2;
    let rank = rank_of(&folded);
    let s = tri_dim - rank;
    let kernel = nullspace_basis(tri_dim, &folded);
    let free_directions: Vec<Matrix> = kernel.iter().map(|v| lift_symmetric(v, n)).collect();
    let mut report = IdentifiabilityReport {
        verdict: if s == 0 {
            Verdict::Identifiable
        } else {
            Verdict::Ambiguous
        },
        recovered_cost: if s == 0 {
            Some(Matrix::zero(n, n))
        } else {
            None
        },
        ambiguity: if s == 0 {
            None
        } else {
            Some(AmbiguityClass {
                base: Some(Matrix::zero(n, n)),
                shift_basis: Vec::new(),
                free_directions,
                coordinate_ranges: None,
                candidates: Vec::new(),
            })
        },
        residual_dimension: Some(s),
        diagnostics: vec![format!(
            "folded difference span has dimension {rank} of {tri_dim}; S = {s}"
        )],
    };
    report.diagnostics.push(
        "shifts are trivial in the symmetric zero-diagonal class (a symmetric \
         zero-diagonal outer sum is zero)"
            .into(),
    );
    Ok(report)
}

// ---------------------------------------------------------------------------
// Totals + plans
// ---------------------------------------------------------------------------

fn require_totals_and_plans(obs: &ObservationSet) -> Result<(), Error> {
    for rec in &obs.records {
        if rec.alpha_or_dual().is_none() || rec.plan.is_none() {
            return Err(Error::InvalidObservations(
                "totals and plans are required for this procedure".into(),
            ));
        }
    }
    Ok(())
}

fn merge_or_inconsistent(
    obs: &ObservationSet,
) -> Result<Result<ObservationSet, IdentifiabilityReport>, Error> {
    match merge_repeated_marginals(obs) {
        Ok(m) => Ok(Ok(m)),
        Err(Error::ConflictingTotals { first, second }) => {
            Ok(Err(IdentifiabilityReport::inconsistent().note(format!(
                "records {first} and {second} share marginals but disagree on the total cost"
            ))))
        }
        Err(e) => Err(e),
    }
}

/// Identifiability from totals and plans: one exact system with equalities on
/// the observed minimal-face vertices and inequalities on the rest (or the
/// reduced set when `reduce_constraints` is on), plus class constraints.
pub fn identify_costs_plans(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    require_totals_and_plans(obs)?;
    let merged = match merge_or_inconsistent(obs)? {
        Ok(m) => m,
        Err(report) => return Ok(report),
    };
    let mut cache = EpCache::new(&opts.limits);
    let faces = observed_faces(&merged, opts, &mut cache)?;
    let mut sys = LinearSystem::new(n * m);
    for (rec, face) in &faces {
        let alpha = rec.alpha_or_dual().expect("validated above");
        let eps = cache.get(&rec.marginals)?;
        let mut in_face = vec![false; eps.len()];
        for &k in &face.vertex_indices {
            in_face[k] = true;
        }
        for &k in &face.vertex_indices {
            sys.push_eq(eps.vertices[k].to_col_major(), alpha.clone());
        }
        if opts.reduce_constraints {
            let (_, inequality) = crate::polytope::reduced_constraint_set(face, eps)?;
            for k in inequality {
                sys.push_ge(eps.vertices[k].to_col_major(), alpha.clone());
            }
        } else {
            for (k, v) in eps.vertices.iter().enumerate() {
                if !in_face[k] {
                    sys.push_ge(v.to_col_major(), alpha.clone());
                }
            }
        }
    }
    append_class_constraints(&mut sys, &merged.cost_class, n, m);
    let mut report = report_from_desc(solution_set(&sys), n, m);
    if report.verdict == Verdict::Ambiguous {
        let margs: Vec<MarginalPair> =
            merged.records.iter().map(|r| r.marginals.clone()).collect();
        if let ShiftKernel::Nontrivial { .. } = shift_kernel_check(&margs) {
            report.diagnostics.push(
                "a nonzero shift is orthogonal to every observed marginal pair; these \
                 observations cannot separate it"
                    .into(),
            );
        }
    }
    Ok(report)
}

/// Particular solution of `rows * x = rhs`, or `None` when inconsistent.
fn solve_equalities(rows: &[Vec<Rational>], rhs: &[Rational], dim: usize) -> Option<Vec<Rational>> {
    let mut aug: Vec<Vec<Rational>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let pivots = rref(&mut aug, dim);
    for row in &aug {
        if row[..dim].iter().all(|v| v.is_zero()) && !row[dim].is_zero() {
            return None;
        }
    }
    let mut x = vec![Rational::zero(); dim];
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = aug[r][dim].clone();
    }
    Some(x)
}

fn consistency_diagnostics(
    cost: &Matrix,
    obs: &ObservationSet,
    limits: &EnumLimits,
) -> Result<(bool, Vec<String>), Error> {
    let checks = verify_consistency(cost, obs, limits)?;
    let all_pass = checks.iter().all(|c| c.pass);
    let mut lines = Vec::new();
    for c in &checks {
        if c.pass {
            lines.push(format!("record {}: consistent", c.record));
        } else {
            lines.push(format!(
                "record {}: inconsistent ({})",
                c.record,
                c.details.join("; ")
            ));
        }
    }
    Ok((all_pass, lines))
}

/// Rank-based sufficient check for totals + plans: if the observed
/// minimal-face vertices span all of `R^{NM}`, the equality system alone has
/// a unique solution. Existence of a consistent cost is assumed by the rank
/// argument, so the solution is verified against the full observations and
/// the result reported separately.
pub fn identify_costs_plans_rank(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    require_totals_and_plans(obs)?;
    let merged = match merge_or_inconsistent(obs)? {
        Ok(m) => m,
        Err(report) => return Ok(report),
    };
    let mut cache = EpCache::new(&opts.limits);
    let faces = observed_faces(&merged, opts, &mut cache)?;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    for (rec, face) in &faces {
        let alpha = rec.alpha_or_dual().expect("validated above");
        let eps = cache.get(&rec.marginals)?;
        for &k in &face.vertex_indices {
            rows.push(eps.vertices[k].to_col_major());
            rhs.push(alpha.clone());
        }
    }
    let rank = rank_of(&rows);
    let dim = n * m;
    let Some(solution) = solve_equalities(&rows, &rhs, dim) else {
        return Ok(IdentifiabilityReport::inconsistent()
            .note("the equality system on the observed faces has no solution"));
    };
    if rank == dim {
        let cost = Matrix::from_col_major(n, m, &solution)?;
        let (all_pass, lines) = consistency_diagnostics(&cost, &merged, &opts.limits)?;
        let mut report = if all_pass {
            IdentifiabilityReport::identifiable(cost)
        } else {
            let mut r = IdentifiabilityReport::inconsistent().note(
                "rank criterion pins a unique equality solution, but it fails the \
                 consistency verification; no cost matrix fits the observations",
            );
            r.recovered_cost = Some(cost);
            r
        };
        report.diagnostics.push(format!(
            "observed face vertices span {rank} of {dim} dimensions"
        ));
        report.diagnostics.push(
            "consistency of the underlying cost is assumed by the rank criterion; \
             verification result follows"
                .into(),
        );
        report.diagnostics.extend(lines);
        Ok(report)
    } else {
        let kernel = nullspace_basis(dim, &rows);
        let free_directions: Vec<Matrix> = kernel
            .iter()
            .map(|v| Matrix::from_col_major(n, m, v))
            .collect::<Result<_, _>>()?;
        let amb = AmbiguityClass {
            base: Some(Matrix::from_col_major(n, m, &solution)?),
            shift_basis: Vec::new(),
            free_directions,
            coordinate_ranges: None,
            candidates: Vec::new(),
        };
        Ok(IdentifiabilityReport::ambiguous(amb).note(format!(
            "observed face vertices span {rank} of {dim} dimensions; \
             equality solutions form an affine class"
        )))
    }
}

/// Symmetric zero-diagonal rank check for totals + plans: folding the
/// observed vertices onto the strict upper triangle, full rank `N(N-1)/2`
/// recovers the cost from the equality system alone.
pub fn identify_costs_plans_sym(
    obs: &ObservationSet,
    opts: &IdentifyOptions,
) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    if n != m {
        return Err(Error::DimensionMismatch(
            "symmetric class requires square cost matrices".into(),
        ));
    }
    require_totals_and_plans(obs)?;
    let merged = match merge_or_inconsistent(obs)? {
        Ok(m) => m,
        Err(report) => return Ok(report),
    };
    let mut cache = EpCache::new(&opts.limits);
    let faces = observed_faces(&merged, opts, &mut cache)?;
    let tri_dim = n * (n - 1) / 2;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    for (rec, face) in &faces {
        let alpha = rec.alpha_or_dual().expect("validated above");
        let eps = cache.get(&rec.marginals)?;
        for &k in &face.vertex_indices {
            rows.push(fold_symmetric(&eps.vertices[k].to_col_major(), n));
            rhs.push(alpha.clone());
        }
    }
    let rank = rank_of(&rows);
    let Some(tri) = solve_equalities(&rows, &rhs, tri_dim) else {
        return Ok(IdentifiabilityReport::inconsistent()
            .note("the folded equality system has no solution"));
    };
    if rank == tri_dim {
        let cost = lift_symmetric(&tri, n);
        let (all_pass, lines) = consistency_diagnostics(&cost, &merged, &opts.limits)?;
        let mut report = if all_pass {
            IdentifiabilityReport::identifiable(cost)
        } else {
            let mut r = IdentifiabilityReport::inconsistent().note(
                "folded rank criterion pins a unique solution, but it fails the \
                 consistency verification",
            );
            r.recovered_cost = Some(cost);
            r
        };
        report.diagnostics.push(format!(
            "folded face vertices span {rank} of {tri_dim} triangle dimensions"
        ));
        report.diagnostics.extend(lines);
        Ok(report)
    } else {
        let kernel = nullspace_basis(tri_dim, &rows);
        let amb = AmbiguityClass {
            base: Some(lift_symmetric(&tri, n)),
            shift_basis: Vec::new(),
            free_directions: kernel.iter().map(|v| lift_symmetric(v, n)).collect(),
            coordinate_ranges: None,
            candidates: Vec::new(),
        };
        Ok(IdentifiabilityReport::ambiguous(amb).note(format!(
            "folded face vertices span {rank} of {tri_dim} triangle dimensions"
        )))
    }
}

// ---------------------------------------------------------------------------
// Full information
// ---------------------------------------------------------------------------

/// Full information: the cost is determined exactly on the union of the plan
/// supports and equals the cellwise maximum of the outer sums there;
/// identifiable iff the supports cover every cell. Uncovered cells get lower
/// bounds only.
pub fn identify_full(obs: &ObservationSet) -> Result<IdentifiabilityReport, Error> {
    let (n, m) = require_valid(obs)?;
    for rec in &obs.records {
        if rec.plan.is_none() || rec.potentials.is_none() {
            return Err(Error::InvalidObservations(
                "full-information identification requires plans and potentials".into(),
            ));
        }
    }
    // Internal consistency: on the support of record k, the outer sum of
    // record k must dominate every other record's outer sum (complementary
    // slackness for a single underlying cost).
    for (k, rec) in obs.records.iter().enumerate() {
        let pot = rec.potentials.as_ref().unwrap();
        for (i, j) in rec.plan.as_ref().unwrap().support() {
            let own = &pot.f[i] + &pot.g[j];
            for (k2, other) in obs.records.iter().enumerate() {
                let pot2 = other.potentials.as_ref().unwrap();
                if &pot2.f[i] + &pot2.g[j] > own {
                    return Err(Error::InvalidObservations(format!(
                        "records {k} and {k2} violate complementary slackness at cell \
                         ({i}, {j}): no single cost is optimal for both"
                    )));
                }
            }
        }
    }
    let lower_bound = Matrix::from_fn(n, m, |i, j| {
        obs.records
            .iter()
            .map(|r| {
                let pot = r.potentials.as_ref().unwrap();
                &pot.f[i] + &pot.g[j]
            })
            .max()
            .expect("at least one record")
    });
    let mut covered = vec![vec![false; m]; n];
    for rec in &obs.records {
        for (i, j) in rec.plan.as_ref().unwrap().support() {
            covered[i][j] = true;
        }
    }
    let uncovered: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| !covered[i][j])
        .collect();
    if uncovered.is_empty() {
        return Ok(IdentifiabilityReport::identifiable(lower_bound).note(
            "plan supports cover every cell; cost is the cellwise maximum of the outer sums",
        ));
    }
    let mut ranges: Vec<CoordRange> = Vec::with_capacity(n * m);
    for j in 0..m {
        for i in 0..n {
            let v = lower_bound.get(i, j).clone();
            if covered[i][j] {
                ranges.push((Some(v.clone()), Some(v)));
            } else {
                ranges.push((Some(v), None));
            }
        }
    }
    let free_directions: Vec<Matrix> = uncovered
        .iter()
        .map(|&(i, j)| {
            Matrix::from_fn(n, m, |r, c| {
                if (r, c) == (i, j) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
        })
        .collect();
    let mut report = IdentifiabilityReport::ambiguous(AmbiguityClass {
        base: Some(lower_bound.clone()),
        shift_basis: Vec::new(),
        free_directions,
        coordinate_ranges: Some(ranges),
        candidates: Vec::new(),
    });
    report.diagnostics.push(format!(
        "{} cell(s) outside the union of plan supports; cost known exactly on the \
         covered cells and bounded below elsewhere",
        uncovered.len()
    ));
    for (i, j) in &uncovered {
        report.diagnostics.push(format!(
            "cell ({i}, {j}): >= {}, unbounded above",
            render_rational(lower_bound.get(*i, *j))
        ));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Shift kernel and consistency verification
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum ShiftKernel {
    /// Every marginal-orthogonal pair `(a, b)` has `a (+) b = 0`.
    Trivial,
    /// Witness with `<a, mu_k> + <b, nu_k> = 0` for every record and
    /// `a (+) b != 0`; such a shift preserves all observed totals and plans.
    Nontrivial { a: Vec<Rational>, b: Vec<Rational> },
}

/// Decides whether a nonzero shift is orthogonal to every observed marginal
/// pair (the obstruction that caps totals-plus-plans identifiability).
pub fn shift_kernel_check(marginals: &[MarginalPair]) -> ShiftKernel {
    if marginals.is_empty() {
        return ShiftKernel::Trivial;
    }
    let (n, m) = (marginals[0].n(), marginals[0].m());
    let rows: Vec<Vec<Rational>> = marginals
        .iter()
        .map(|mp| {
            let mut row = Vec::with_capacity(n + m);
            row.extend(mp.mu.iter().cloned());
            row.extend(mp.nu.iter().cloned());
            row
        })
        .collect();
    // Any element of the kernel with a nonzero outer sum is a witness; the
    // pairs with zero outer sum form the line (t*1, -t*1), so checking the
    // basis suffices.
    for v in nullspace_basis(n + m, &rows) {
        let (a, b) = (&v[..n], &v[n..]);
        let outer_nonzero = a.iter().any(|ai| b.iter().any(|bj| !(ai + bj).is_zero()));
        if outer_nonzero {
            return ShiftKernel::Nontrivial {
                a: a.to_vec(),
                b: b.to_vec(),
            };
        }
    }
    ShiftKernel::Trivial
}

/// Per-record consistency verdict of a candidate cost against observations.
#[derive(Clone, Debug)]
pub struct RecordCheck {
    pub record: usize,
    pub pass: bool,
    /// Exact optimal value of the forward problem for this record.
    pub computed_value: Rational,
    pub details: Vec<String>,
}

/// Checks every populated field of every record against the forward problem
/// solved exactly for `cost`.
pub fn verify_consistency(
    cost: &Matrix,
    obs: &ObservationSet,
    _limits: &EnumLimits,
) -> Result<Vec<RecordCheck>, Error> {
    let mut out = Vec::with_capacity(obs.records.len());
    for (k, rec) in obs.records.iter().enumerate() {
        let sol = solve_forward(cost, &rec.marginals)?;
        let mut details = Vec::new();
        if let Some(alpha) = &rec.alpha {
            if *alpha != sol.value {
                details.push(format!(
                    "observed total {} but computed {}",
                    render_rational(alpha),
                    render_rational(&sol.value)
                ));
            }
        }
        if let Some(plan) = &rec.plan {
            if !crate::types::is_plan_for(plan, &rec.marginals) {
                details.push("plan is not feasible for its marginals".into());
            } else if plan.dot(cost) != sol.value {
                details.push(format!(
                    "plan cost {} differs from the optimal value {}",
                    render_rational(&plan.dot(cost)),
                    render_rational(&sol.value)
                ));
            }
        }
        if let Some(pot) = &rec.potentials {
            if !pot.is_feasible_for(cost) {
                details.push("potentials are dual-infeasible for the cost".into());
            } else if pot.dual_value(&rec.marginals) != sol.value {
                details.push(format!(
                    "dual value {} differs from the optimal value {}",
                    render_rational(&pot.dual_value(&rec.marginals)),
                    render_rational(&sol.value)
                ));
            }
        }
        out.push(RecordCheck {
            record: k,
            pass: details.is_empty(),
            computed_value: sol.value,
            details,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};
    use crate::types::PotentialPair;

    fn marg(mu: &[(i64, i64)], nu: &[(i64, i64)]) -> MarginalPair {
        MarginalPair::new(
            mu.iter().map(|&(p, q)| rat(p, q)).collect(),
            nu.iter().map(|&(p, q)| rat(p, q)).collect(),
        )
    }

    fn mat(rows: &[&[(i64, i64)]]) -> Matrix {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&(p, q)| rat(p, q)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn costs_only_set(data: &[(MarginalPair, Rational)], class: CostClass) -> ObservationSet {
        ObservationSet {
            records: data
                .iter()
                .map(|(m, a)| ObservationRecord::costs_only(m.clone(), a.clone()))
                .collect(),
            cost_class: class,
        }
    }

    /// The four-record 2x2 totals-only instance with a unique consistent
    /// cost [[9/2, -2], [13/4, 13/4]].
    fn golden_costs_only() -> ObservationSet {
        costs_only_set(
            &[
                (marg(&[(3, 4), (1, 4)], &[(5, 8), (3, 8)]), rat(7, 4)),
                (marg(&[(3, 7), (4, 7)], &[(1, 5), (4, 5)]), rat_int(1)),
                (marg(&[(4, 5), (1, 5)], &[(1, 2), (1, 2)]), rat_int(1)),
                (marg(&[(3, 7), (4, 7)], &[(1, 2), (1, 2)]), rat_int(1)),
            ],
            CostClass::General,
        )
    }

    #[test]
    fn totals_only_golden_instance_identifiable() {
        let report = identify_costs_only(&golden_costs_only(), &IdentifyOptions::default())
            .unwrap();
        assert_eq!(report.verdict, Verdict::Identifiable);
        assert_eq!(
            report.recovered_cost.unwrap(),
            mat(&[&[(9, 2), (-2, 1)], &[(13, 4), (13, 4)]])
        );
    }

    #[test]
    fn totals_only_equality_check_not_decisive_on_golden_instance() {
        let report = identify_costs_only_equality_sufficient(
            &golden_costs_only(),
            &IdentifyOptions::default(),
        )
        .unwrap();
        assert_ne!(report.verdict, Verdict::Identifiable);
        assert!(report
            .diagnostics
            .iter()
            .any(|d| d.contains("not decidable")));
        // Each combination has a unique solution; they disagree.
        let amb = report.ambiguity.expect("distinct candidates listed");
        assert!(amb.candidates.len() > 1);
    }

    #[test]
    fn totals_only_single_record_is_ambiguous() {
        let obs = costs_only_set(
            &[(marg(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]), rat_int(0))],
            CostClass::General,
        );
        let report = identify_costs_only(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Ambiguous);
    }

    #[test]
    fn totals_only_box_class_detects_inconsistency() {
        // alpha = 10 cannot be attained by any cost in [0, 1]^{2x2}.
        let mut obs = golden_costs_only();
        obs.records[0].alpha = Some(rat_int(10));
        obs.cost_class = CostClass::Box(rat_int(1));
        let report = identify_costs_only(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Inconsistent);
    }

    #[test]
    fn totals_only_cap_yields_undecided() {
        let opts = IdentifyOptions {
            combination_cap: 3,
            ..IdentifyOptions::default()
        };
        let report = identify_costs_only(&golden_costs_only(), &opts).unwrap();
        assert_eq!(report.verdict, Verdict::UndecidedCap);
    }

    #[test]
    fn sweep_verdict_is_order_independent() {
        // Shuffle each record's candidate list; the sweep verdict must not
        // change (aggregation is order independent).
        let obs = golden_costs_only();
        let opts = IdentifyOptions::default();
        let (n, m) = (2, 2);
        let mut cache = EpCache::new(&opts.limits);
        let mut lists: Vec<Vec<Vec<Rational>>> = Vec::new();
        let mut alphas = Vec::new();
        for rec in &obs.records {
            let eps = cache.get(&rec.marginals).unwrap();
            lists.push(eps.vertices.iter().map(|v| v.to_col_major()).collect());
            alphas.push(rec.alpha.clone().unwrap());
        }
        let mut base = LinearSystem::new(n * m);
        for (k, list) in lists.iter().enumerate() {
            for v in list {
                base.push_ge(v.clone(), alphas[k].clone());
            }
        }
        let run = |lists: &Vec<Vec<Vec<Rational>>>| {
            let counts: Vec<usize> = lists.iter().map(Vec::len).collect();
            match sweep(&base, &counts, 1_000_000, |sys, combo| {
                for (k, &choice) in combo.iter().enumerate() {
                    sys.push_eq(lists[k][choice].clone(), alphas[k].clone());
                }
            }) {
                SweepVerdict::Identifiable(p) => ("identifiable", Some(p)),
                SweepVerdict::AllInfeasible => ("inconsistent", None),
                _ => ("other", None),
            }
        };
        let baseline = run(&lists);
        let mut shuffled = lists.clone();
        for list in shuffled.iter_mut() {
            list.reverse();
        }
        let alt = run(&shuffled);
        assert_eq!(baseline, alt);
    }

    /// The three-record potentials instance over Monge costs with the unique
    /// consistent cost [[2, 13/9], [0, -5/9]].
    fn golden_potentials() -> ObservationSet {
        let recs = vec![
            (
                marg(&[(1, 2), (1, 2)], &[(1, 1), (0, 1)]),
                rat_int(1),
                vec![rat_int(0), rat_int(-2)],
                vec![rat_int(2), rat_int(0)],
            ),
            (
                marg(&[(1, 3), (2, 3)], &[(1, 1), (0, 1)]),
                rat(2, 3),
                vec![rat_int(0), rat_int(-2)],
                vec![rat_int(2), rat_int(0)],
            ),
            (
                marg(&[(1, 1), (0, 1)], &[(2, 5), (3, 5)]),
                rat(5, 3),
                vec![rat_int(2), rat_int(0)],
                vec![rat_int(0), rat(-5, 9)],
            ),
        ];
        ObservationSet {
            records: recs
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

    #[test]
    fn potentials_monge_golden_instance() {
        let report =
            identify_potentials_monge(&golden_potentials(), &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Identifiable);
        assert_eq!(
            report.recovered_cost.unwrap(),
            mat(&[&[(2, 1), (13, 9)], &[(0, 1), (-5, 9)]])
        );
    }

    #[test]
    fn potentials_monge_dropping_a_record_is_ambiguous() {
        let mut obs = golden_potentials();
        obs.records.pop();
        let report = identify_potentials_monge(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Ambiguous);
        // Cell (0, 1) = column-major coordinate 2 is not pinned.
        let ranges = report.ambiguity.unwrap().coordinate_ranges.unwrap();
        assert_ne!(ranges[2].0, ranges[2].1);
    }

    #[test]
    fn potentials_monge_trivial_single_record_ambiguous() {
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: marg(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]),
                alpha: Some(rat_int(0)),
                plan: None,
                potentials: Some(PotentialPair {
                    f: vec![rat_int(0), rat_int(0)],
                    g: vec![rat_int(0), rat_int(0)],
                }),
            }],
            cost_class: CostClass::Monge,
        };
        let report = identify_potentials_monge(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Ambiguous);
    }

    #[test]
    fn potentials_support_cover_examples() {
        let margs: Vec<MarginalPair> = golden_potentials()
            .records
            .iter()
            .map(|r| r.marginals.clone())
            .collect();
        assert!(!monge_support_cover_sufficient(&margs));
        // All Dirac marginal pairs cover every cell.
        let diracs = vec![
            marg(&[(1, 1), (0, 1)], &[(1, 1), (0, 1)]),
            marg(&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]),
            marg(&[(0, 1), (1, 1)], &[(1, 1), (0, 1)]),
            marg(&[(0, 1), (1, 1)], &[(0, 1), (1, 1)]),
        ];
        assert!(monge_support_cover_sufficient(&diracs));
        // A single pair with interleaving sums still misses cell (2, 1).
        let single = vec![marg(&[(1, 2), (1, 2)], &[(1, 3), (2, 3)])];
        assert!(!monge_support_cover_sufficient(&single));
    }

    #[test]
    fn potentials_full_support_single_record() {
        // One row: the unique plan has full support, so c = f (+) g.
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: MarginalPair::new(
                    vec![rat_int(1)],
                    vec![rat(1, 2), rat(1, 2)],
                ),
                alpha: Some(rat(1, 2)),
                plan: None,
                potentials: Some(PotentialPair {
                    f: vec![rat_int(0)],
                    g: vec![rat_int(0), rat_int(1)],
                }),
            }],
            cost_class: CostClass::General,
        };
        let report = identify_potentials(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Identifiable);
        assert_eq!(
            report.recovered_cost.unwrap(),
            Matrix::from_rows(vec![vec![rat_int(0), rat_int(1)]]).unwrap()
        );
    }

    #[test]
    fn merge_examples() {
        let m1 = marg(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]);
        let v1 = mat(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)]]);
        let v2 = mat(&[&[(0, 1), (1, 2)], &[(1, 2), (0, 1)]]);
        let obs = ObservationSet {
            records: vec![
                ObservationRecord {
                    marginals: m1.clone(),
                    alpha: None,
                    plan: Some(v1.clone()),
                    potentials: None,
                },
                ObservationRecord {
                    marginals: m1.clone(),
                    alpha: None,
                    plan: Some(v2.clone()),
                    potentials: None,
                },
            ],
            cost_class: CostClass::General,
        };
        let merged = merge_repeated_marginals(&obs).unwrap();
        assert_eq!(merged.records.len(), 1);
        assert_eq!(
            merged.records[0].plan.as_ref().unwrap(),
            &mat(&[&[(1, 4), (1, 4)], &[(1, 4), (1, 4)]])
        );

        // Two copies of the same record collapse to one.
        let dup = ObservationSet {
            records: vec![obs.records[0].clone(), obs.records[0].clone()],
            cost_class: CostClass::General,
        };
        let merged = merge_repeated_marginals(&dup).unwrap();
        assert_eq!(merged.records.len(), 1);
        assert_eq!(merged.records[0].plan.as_ref().unwrap(), &v1);

        // Distinct marginals stay unchanged.
        let distinct = ObservationSet {
            records: vec![
                ObservationRecord {
                    marginals: m1.clone(),
                    alpha: None,
                    plan: Some(v1.clone()),
                    potentials: None,
                },
                ObservationRecord {
                    marginals: marg(&[(1, 3), (2, 3)], &[(1, 2), (1, 2)]),
                    alpha: None,
                    plan: Some(mat(&[&[(1, 3), (0, 1)], &[(1, 6), (1, 2)]])),
                    potentials: None,
                },
            ],
            cost_class: CostClass::General,
        };
        assert_eq!(
            merge_repeated_marginals(&distinct).unwrap().records.len(),
            2
        );

        // Conflicting totals on shared marginals error out.
        let mut conflict = obs.clone();
        conflict.records[0].alpha = Some(rat_int(0));
        conflict.records[1].alpha = Some(rat_int(1));
        assert!(matches!(
            merge_repeated_marginals(&conflict),
            Err(Error::ConflictingTotals { .. })
        ));
    }

    #[test]
    fn plans_only_interior_plan_has_s_zero() {
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: marg(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]),
                alpha: None,
                plan: Some(mat(&[&[(1, 4), (1, 4)], &[(1, 4), (1, 4)]])),
                potentials: None,
            }],
            cost_class: CostClass::General,
        };
        let report = identify_plans_only(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::IdentifiableInQuotient);
        assert_eq!(report.residual_dimension, Some(0));
        let amb = report.ambiguity.unwrap();
        assert_eq!(amb.shift_basis.len(), 3);
        assert!(amb.free_directions.is_empty());
    }

    #[test]
    fn plans_only_vertex_plan_has_s_one() {
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: marg(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]),
                alpha: None,
                plan: Some(mat(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)]])),
                potentials: None,
            }],
            cost_class: CostClass::General,
        };
        let report = identify_plans_only(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Ambiguous);
        assert_eq!(report.residual_dimension, Some(1));
        assert_eq!(report.ambiguity.unwrap().free_directions.len(), 1);
    }

    #[test]
    fn plans_only_requires_records() {
        let obs = ObservationSet {
            records: vec![],
            cost_class: CostClass::General,
        };
        assert!(identify_plans_only(&obs, &IdentifyOptions::default()).is_err());
    }

    #[test]
    fn plans_only_sym_interior_plan_pins_cost() {
        // N = 2 symmetric zero-diagonal: a plan in the interior of the edge
        // forces c12 = 0.
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: marg(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]),
                alpha: None,
                plan: Some(mat(&[&[(1, 4), (1, 4)], &[(1, 4), (1, 4)]])),
                potentials: None,
            }],
            cost_class: CostClass::Sym0,
        };
        let report = identify_plans_only_sym(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Identifiable);
        assert_eq!(report.residual_dimension, Some(0));
        assert!(report.recovered_cost.unwrap().is_zero());
    }

    #[test]
    fn plans_only_sym_vertex_plan_leaves_s_one() {
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: marg(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]),
                alpha: None,
                plan: Some(mat(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)]])),
                potentials: None,
            }],
            cost_class: CostClass::Sym0,
        };
        let report = identify_plans_only_sym(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Ambiguous);
        assert_eq!(report.residual_dimension, Some(1));
    }

    #[test]
    fn plans_only_sym_rejects_rectangular() {
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: marg(&[(1, 2), (1, 2)], &[(1, 3), (1, 3), (1, 3)]),
                alpha: None,
                plan: Some(mat(&[
                    &[(1, 6), (1, 6), (1, 6)],
                    &[(1, 6), (1, 6), (1, 6)],
                ])),
                potentials: None,
            }],
            cost_class: CostClass::Sym0,
        };
        assert!(identify_plans_only_sym(&obs, &IdentifyOptions::default()).is_err());
    }

    /// The three-record totals+plans instance with unique consistent cost
    /// [[-1/3, 7/3], [-1/3, 7/3]].
    fn golden_costs_plans() -> ObservationSet {
        let recs = vec![
            (mat(&[&[(3, 20), (1, 4)], &[(3, 5), (0, 1)]]), rat(1, 3)),
            (mat(&[&[(0, 1), (1, 2)], &[(1, 2), (0, 1)]]), rat_int(1)),
            (mat(&[&[(1, 2), (1, 10)], &[(0, 1), (2, 5)]]), rat_int(1)),
        ];
        ObservationSet {
            records: recs
                .into_iter()
                .map(|(plan, alpha)| ObservationRecord {
                    marginals: crate::types::plan_marginals(&plan),
                    alpha: Some(alpha),
                    plan: Some(plan),
                    potentials: None,
                })
                .collect(),
            cost_class: CostClass::General,
        }
    }

    #[test]
    fn costs_plans_golden_instance() {
        let report =
            identify_costs_plans(&golden_costs_plans(), &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Identifiable);
        assert_eq!(
            report.recovered_cost.unwrap(),
            mat(&[&[(-1, 3), (7, 3)], &[(-1, 3), (7, 3)]])
        );
    }

    /// Four linearly independent plans whose totals admit no consistent cost;
    /// the equality system still has the unique solution
    /// [[8/3, 10/3], [1/3, 0]].
    fn inconsistent_costs_plans() -> ObservationSet {
        let recs = vec![
            (mat(&[&[(0, 1), (1, 4)], &[(1, 2), (1, 4)]]), rat_int(1)),
            (mat(&[&[(1, 3), (0, 1)], &[(1, 3), (1, 3)]]), rat_int(1)),
            (mat(&[&[(1, 3), (1, 3)], &[(0, 1), (1, 3)]]), rat_int(2)),
            (mat(&[&[(4, 11), (3, 11)], &[(4, 11), (0, 1)]]), rat_int(2)),
        ];
        ObservationSet {
            records: recs
                .into_iter()
                .map(|(plan, alpha)| ObservationRecord {
                    marginals: crate::types::plan_marginals(&plan),
                    alpha: Some(alpha),
                    plan: Some(plan),
                    potentials: None,
                })
                .collect(),
            cost_class: CostClass::General,
        }
    }

    #[test]
    fn costs_plans_full_system_detects_inconsistency() {
        let report =
            identify_costs_plans(&inconsistent_costs_plans(), &IdentifyOptions::default())
                .unwrap();
        assert_eq!(report.verdict, Verdict::Inconsistent);
    }

    #[test]
    fn costs_plans_rank_check_flags_failed_verification() {
        let report =
            identify_costs_plans_rank(&inconsistent_costs_plans(), &IdentifyOptions::default())
                .unwrap();
        assert_eq!(report.verdict, Verdict::Inconsistent);
        assert_eq!(
            report.recovered_cost.unwrap(),
            mat(&[&[(8, 3), (10, 3)], &[(1, 3), (0, 1)]])
        );
        let text = report.diagnostics.join("\n");
        assert!(text.contains("3/4"));
        assert!(text.contains("19/11"));
    }

    #[test]
    fn costs_plans_rank_dirac_plans() {
        // All four Dirac plans: rank NM, identifiable, c[i,j] = alpha.
        let alphas = [rat_int(3), rat(1, 2), rat_int(-1), rat(7, 5)];
        let mut records = Vec::new();
        let mut expected = Matrix::zero(2, 2);
        let mut k = 0;
        for j in 0..2 {
            for i in 0..2 {
                let plan = Matrix::from_fn(2, 2, |r, c| {
                    if (r, c) == (i, j) {
                        rat_int(1)
                    } else {
                        rat_int(0)
                    }
                });
                expected.set(i, j, alphas[k].clone());
                records.push(ObservationRecord {
                    marginals: crate::types::plan_marginals(&plan),
                    alpha: Some(alphas[k].clone()),
                    plan: Some(plan),
                    potentials: None,
                });
                k += 1;
            }
        }
        let obs = ObservationSet {
            records,
            cost_class: CostClass::General,
        };
        let report = identify_costs_plans_rank(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Identifiable);
        assert_eq!(report.recovered_cost.unwrap(), expected);
        // The full system agrees.
        let full = identify_costs_plans(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(full.verdict, Verdict::Identifiable);
        assert_eq!(full.recovered_cost.unwrap(), expected);
    }

    #[test]
    fn costs_plans_rank_single_vertex_is_ambiguous() {
        let plan = mat(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)]]);
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: crate::types::plan_marginals(&plan),
                alpha: Some(rat_int(1)),
                plan: Some(plan),
                potentials: None,
            }],
            cost_class: CostClass::General,
        };
        let report = identify_costs_plans_rank(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Ambiguous);
        assert_eq!(report.ambiguity.unwrap().free_directions.len(), 3);
    }

    #[test]
    fn costs_plans_sym_one_record_pins_single_parameter() {
        // The anti-diagonal vertex optimal with total -1/2 forces
        // c12 = -1/2 in the symmetric zero-diagonal class.
        let plan = mat(&[&[(0, 1), (1, 2)], &[(1, 2), (0, 1)]]);
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: crate::types::plan_marginals(&plan),
                alpha: Some(rat(-1, 2)),
                plan: Some(plan),
                potentials: None,
            }],
            cost_class: CostClass::Sym0,
        };
        let report = identify_costs_plans_sym(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Identifiable);
        assert_eq!(
            report.recovered_cost.unwrap(),
            mat(&[&[(0, 1), (-1, 2)], &[(-1, 2), (0, 1)]])
        );
    }

    #[test]
    fn costs_plans_sym_inconsistent_total_detected() {
        // A positive off-diagonal total with the anti-diagonal vertex
        // optimal is impossible: the diagonal vertex always costs 0.
        let plan = mat(&[&[(0, 1), (1, 2)], &[(1, 2), (0, 1)]]);
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: crate::types::plan_marginals(&plan),
                alpha: Some(rat(1, 2)),
                plan: Some(plan),
                potentials: None,
            }],
            cost_class: CostClass::Sym0,
        };
        let report = identify_costs_plans_sym(&obs, &IdentifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Inconsistent);
    }

    #[test]
    fn full_information_examples() {
        // Full-support plan with zero potentials: c = 0 everywhere.
        let plan = mat(&[&[(1, 4), (1, 4)], &[(1, 4), (1, 4)]]);
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: crate::types::plan_marginals(&plan),
                alpha: Some(rat_int(0)),
                plan: Some(plan),
                potentials: Some(PotentialPair {
                    f: vec![rat_int(0), rat_int(0)],
                    g: vec![rat_int(0), rat_int(0)],
                }),
            }],
            cost_class: CostClass::General,
        };
        let report = identify_full(&obs).unwrap();
        assert_eq!(report.verdict, Verdict::Identifiable);
        assert!(report.recovered_cost.unwrap().is_zero());
    }

    #[test]
    fn full_information_partial_support() {
        // Third golden potentials record alone: support {(0,0), (0,1)}.
        let plan = mat(&[&[(2, 5), (3, 5)], &[(0, 1), (0, 1)]]);
        let obs = ObservationSet {
            records: vec![ObservationRecord {
                marginals: marg(&[(1, 1), (0, 1)], &[(2, 5), (3, 5)]),
                alpha: Some(rat(5, 3)),
                plan: Some(plan),
                potentials: Some(PotentialPair {
                    f: vec![rat_int(2), rat_int(0)],
                    g: vec![rat_int(0), rat(-5, 9)],
                }),
            }],
            cost_class: CostClass::General,
        };
        let report = identify_full(&obs).unwrap();
        assert_eq!(report.verdict, Verdict::Ambiguous);
        let base = report.ambiguity.unwrap().base.unwrap();
        assert_eq!(base.get(0, 0), &rat_int(2));
        assert_eq!(base.get(0, 1), &rat(13, 9));
        assert_eq!(report.residual_dimension, None);
    }

    #[test]
    fn shift_kernel_examples() {
        // One record: plenty of orthogonal shifts.
        let single = vec![marg(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)])];
        assert!(matches!(
            shift_kernel_check(&single),
            ShiftKernel::Nontrivial { .. }
        ));
        // Dirac pairs covering all cells force a trivial kernel.
        let diracs = vec![
            marg(&[(1, 1), (0, 1)], &[(1, 1), (0, 1)]),
            marg(&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]),
            marg(&[(0, 1), (1, 1)], &[(1, 1), (0, 1)]),
            marg(&[(0, 1), (1, 1)], &[(0, 1), (1, 1)]),
        ];
        assert!(matches!(shift_kernel_check(&diracs), ShiftKernel::Trivial));
        // Duplicates do not change the answer.
        let mut dup = diracs.clone();
        dup.extend(diracs.clone());
        assert!(matches!(shift_kernel_check(&dup), ShiftKernel::Trivial));
    }

    #[test]
    fn shift_kernel_witness_is_orthogonal() {
        let margs = vec![
            marg(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]),
            marg(&[(1, 3), (2, 3)], &[(1, 4), (3, 4)]),
        ];
        if let ShiftKernel::Nontrivial { a, b } = shift_kernel_check(&margs) {
            for mp in &margs {
                let s: Rational = a
                    .iter()
                    .zip(&mp.mu)
                    .chain(b.iter().zip(&mp.nu))
                    .map(|(x, y)| x * y)
                    .sum();
                assert!(s.is_zero());
            }
        } else {
            panic!("two records on 2x2 must leave a nontrivial shift kernel");
        }
    }

    #[test]
    fn verify_consistency_round_trip() {
        let cost = mat(&[&[(9, 2), (-2, 1)], &[(13, 4), (13, 4)]]);
        let obs = golden_costs_only();
        let checks =
            verify_consistency(&cost, &obs, &EnumLimits::default()).unwrap();
        assert!(checks.iter().all(|c| c.pass));
    }

    #[test]
    fn verify_consistency_reports_computed_values() {
        let cost = mat(&[&[(8, 3), (10, 3)], &[(1, 3), (0, 1)]]);
        let obs = inconsistent_costs_plans();
        let checks =
            verify_consistency(&cost, &obs, &EnumLimits::default()).unwrap();
        let values: Vec<Rational> = checks.iter().map(|c| c.computed_value.clone()).collect();
        assert_eq!(
            values,
            vec![rat(3, 4), rat_int(1), rat_int(2), rat(19, 11)]
        );
        assert_eq!(
            checks.iter().map(|c| c.pass).collect::<Vec<_>>(),
            vec![false, true, true, false]
        );
    }

    #[test]
    fn combination_cursor_counts() {
        let cursor = CombinationCursor::new(vec![2, 3, 2]);
        let combos: Vec<Vec<usize>> = cursor.collect();
        assert_eq!(combos.len(), 12);
        let unique: std::collections::BTreeSet<Vec<usize>> = combos.into_iter().collect();
        assert_eq!(unique.len(), 12);
    }
}

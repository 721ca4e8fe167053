//! Statistical recovery of the cost from noisy totals: least squares with
//! asymptotic confidence intervals, a shifted LASSO for baseline-sparse
//! costs, restricted-eigenvalue certification, and a seeded synthetic-data
//! generator. This module works in floating point; the exact side of the
//! crate never does.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::Error;
use crate::forward::solve_forward;
use crate::rational::to_f64;
use crate::types::{MarginalPair, Matrix, ObservationSet};

const MARGINAL_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;
const CD_TOL: f64 = 1e-10;
const CD_MAX_SWEEPS: usize = 100_000;

/// The regression view of totals-plus-plans observations: one vectorized
/// plan per row and the (possibly noisy) totals as the response.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    pub n: usize,
    pub m: usize,
    /// K x (N*M); row k is the column-major vectorization of plan k.
    pub plans: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Noise standard deviation, when known.
    pub sigma: Option<f64>,
}

impl DesignMatrix {
    /// Builds the design from raw rows, checking that each row looks like a
    /// vectorized transport plan (nonnegative, unit total mass).
    pub fn from_parts(
        n: usize,
        m: usize,
        rows: Vec<Vec<f64>>,
        y: Vec<f64>,
        sigma: Option<f64>,
    ) -> Result<Self, Error> {
        if rows.len() != y.len() {
            return Err(Error::DimensionMismatch(
                "row count differs from response length".into(),
            ));
        }
        for (k, row) in rows.iter().enumerate() {
            if row.len() != n * m {
                return Err(Error::DimensionMismatch(format!(
                    "row {k} has {} entries, expected {}",
                    row.len(),
                    n * m
                )));
            }
            if row.iter().any(|&v| v < -MARGINAL_TOL) {
                return Err(Error::InvalidObservations(format!(
                    "row {k} has a negative plan entry"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > MARGINAL_TOL {
                return Err(Error::InvalidObservations(format!(
                    "row {k} has total mass {total}, expected 1"
                )));
            }
        }
        let k = rows.len();
        let plans = DMatrix::from_fn(k, n * m, |r, c| rows[r][c]);
        Ok(DesignMatrix {
            n,
            m,
            plans,
            y: DVector::from_vec(y),
            sigma,
        })
    }

    /// Converts exact observations (totals and plans) into the floating
    /// design, checking plan marginals against each record within 1e-12.
    pub fn from_observations(obs: &ObservationSet) -> Result<Self, Error> {
        if obs.records.is_empty() {
            return Err(Error::InvalidObservations("no records".into()));
        }
        let (n, m) = (obs.records[0].marginals.n(), obs.records[0].marginals.m());
        let mut rows = Vec::with_capacity(obs.records.len());
        let mut y = Vec::with_capacity(obs.records.len());
        for (k, rec) in obs.records.iter().enumerate() {
            let plan = rec.plan.as_ref().ok_or_else(|| {
                Error::InvalidObservations(format!("record {k} carries no plan"))
            })?;
            let alpha = rec.alpha.as_ref().ok_or_else(|| {
                Error::InvalidObservations(format!("record {k} carries no total"))
            })?;
            let row: Vec<f64> = plan.to_col_major().iter().map(to_f64).collect();
            for (i, (s, mu)) in plan
                .row_sums()
                .iter()
                .zip(&rec.marginals.mu)
                .enumerate()
            {
                if (to_f64(s) - to_f64(mu)).abs() > MARGINAL_TOL {
                    return Err(Error::InvalidObservations(format!(
                        "record {k}: plan row {i} sum differs from mu"
                    )));
                }
            }
            for (j, (s, nu)) in plan
                .col_sums()
                .iter()
                .zip(&rec.marginals.nu)
                .enumerate()
            {
                if (to_f64(s) - to_f64(nu)).abs() > MARGINAL_TOL {
                    return Err(Error::InvalidObservations(format!(
                        "record {k}: plan column {j} sum differs from nu"
                    )));
                }
            }
            rows.push(row);
            y.push(to_f64(alpha));
        }
        DesignMatrix::from_parts(n, m, rows, y, None)
    }

    pub fn k(&self) -> usize {
        self.plans.nrows()
    }

    pub fn dim(&self) -> usize {
        self.n * self.m
    }
}

/// Estimator output. `c_hat` is column-major like everything else.
#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub n: usize,
    pub m: usize,
    pub c_hat: Vec<f64>,
    pub sigma_hat: Option<f64>,
    /// Covariance estimate of `c_hat` (sigma^2 (P'P)^{-1}).
    pub covariance: Option<DMatrix<f64>>,
    /// Per-entry intervals at the requested level, column-major.
    pub ci: Option<Vec<(f64, f64)>>,
    pub lambda: Option<f64>,
    pub b0: Option<f64>,
    /// Coordinate-descent sweeps used (LASSO only).
    pub sweeps: Option<usize>,
}

impl EstimateReport {
    /// Row-major entries for display.
    pub fn c_hat_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.m).map(|j| self.c_hat[j * self.n + i]).collect())
            .collect()
    }
}

/// Least squares estimate `(P'P)^{-1} P' Y` with residual-based noise
/// estimate when `K > NM` and the noise level is not supplied.
pub fn least_squares(design: &DesignMatrix) -> Result<EstimateReport, Error> {
    let d = design.dim();
    let k = design.k();
    let gram = design.plans.transpose() * &design.plans;
    let svd = gram.clone().svd(false, false);
    let max_sv = svd.singular_values.max();
    let kernel_dim = svd
        .singular_values
        .iter()
        .filter(|&&s| s <= RANK_TOL * max_sv)
        .count();
    if kernel_dim > 0 || max_sv == 0.0 {
        return Err(Error::RankDeficient { kernel_dim });
    }
    let gram_inv = gram
        .try_inverse()
        .ok_or(Error::RankDeficient { kernel_dim: 0 })?;
    let c_hat_vec = &gram_inv * design.plans.transpose() * &design.y;
    let residual = &design.y - &design.plans * &c_hat_vec;
    let sigma_hat = match design.sigma {
        Some(s) => Some(s),
        None if k > d => {
            let rss: f64 = residual.iter().map(|r| r * r).sum();
            Some((rss / (k - d) as f64).sqrt())
        }
        None => None,
    };
    let covariance = sigma_hat.map(|s| &gram_inv * (s * s));
    Ok(EstimateReport {
        n: design.n,
        m: design.m,
        c_hat: c_hat_vec.iter().copied().collect(),
        sigma_hat,
        covariance,
        ci: None,
        lambda: None,
        b0: None,
        sweeps: None,
    })
}

/// Entrywise asymptotic intervals `c_d +- z_{1-gamma/2} sqrt(cov_dd)` at
/// confidence `level = 1 - gamma`. Requires a covariance estimate (known or
/// estimated noise).
pub fn asymptotic_ci(report: &EstimateReport, level: f64) -> Result<Vec<(f64, f64)>, Error> {
    let cov = report.covariance.as_ref().ok_or_else(|| {
        Error::Unsupported(
            "confidence intervals need a noise estimate (K > NM or known sigma)".into(),
        )
    })?;
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Unsupported(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + level / 2.0);
    Ok(report
        .c_hat
        .iter()
        .enumerate()
        .map(|(d, &c)| {
            let half = z * cov[(d, d)].sqrt();
            (c - half, c + half)
        })
        .collect())
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Shifted LASSO `min |Y - Pc|^2 + lambda |c - b0|_1` by cyclic coordinate
/// descent with soft thresholding on the shifted variable `c - b0`.
pub fn lasso_shifted(
    design: &DesignMatrix,
    lambda: f64,
    b0: f64,
) -> Result<EstimateReport, Error> {
    let (report, _) = lasso_shifted_with_trace(design, lambda, b0)?;
    Ok(report)
}

/// Same as [`lasso_shifted`], additionally returning the objective value
/// after every sweep (non-increasing by construction of the descent).
pub fn lasso_shifted_with_trace(
    design: &DesignMatrix,
    lambda: f64,
    b0: f64,
) -> Result<(EstimateReport, Vec<f64>), Error> {
    if lambda < 0.0 {
        return Err(Error::Unsupported("lambda must be nonnegative".into()));
    }
    let d = design.dim();
    let k = design.k();
    // Shift: with x = c - b0, the model is Y - b0 * (P 1) = P x + noise.
    let row_mass = &design.plans * DVector::from_element(d, 1.0);
    let y_shift = &design.y - row_mass * b0;
    let col_norms: Vec<f64> = (0..d)
        .map(|j| design.plans.column(j).iter().map(|v| v * v).sum())
        .collect();
    let mut x = vec![0.0; d];
    let mut residual = y_shift.clone();
    let mut trace = Vec::new();
    let objective = |residual: &DVector<f64>, x: &[f64]| -> f64 {
        let rss: f64 = residual.iter().map(|r| r * r).sum();
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        rss + lambda * l1
    };
    let mut sweeps = 0;
    loop {
        if sweeps >= CD_MAX_SWEEPS {
            return Err(Error::NonConvergence { sweeps });
        }
        sweeps += 1;
        let mut max_update: f64 = 0.0;
        for j in 0..d {
            if col_norms[j] == 0.0 {
                // An all-zero column cannot lower the fit; the penalty pins
                // the shifted coordinate at zero.
                x[j] = 0.0;
                continue;
            }
            let col = design.plans.column(j);
            let rho: f64 = col
                .iter()
                .zip(residual.iter())
                .map(|(p, r)| p * r)
                .sum::<f64>()
                + col_norms[j] * x[j];
            let new = soft_threshold(rho, lambda / 2.0) / col_norms[j];
            let delta = new - x[j];
            if delta != 0.0 {
                for (ri, pi) in residual.iter_mut().zip(col.iter()) {
                    *ri -= pi * delta;
                }
                x[j] = new;
            }
            max_update = max_update.max(delta.abs());
        }
        trace.push(objective(&residual, &x));
        if max_update < CD_TOL {
            break;
        }
    }
    let c_hat: Vec<f64> = x.iter().map(|v| v + b0).collect();
    let _ = k;
    Ok((
        EstimateReport {
            n: design.n,
            m: design.m,
            c_hat,
            sigma_hat: design.sigma,
            covariance: None,
            ci: None,
            lambda: Some(lambda),
            b0: Some(b0),
            sweeps: Some(sweeps),
        },
        trace,
    ))
}

/// Regularization rule `2 sigma [sqrt((2 log N + 2 log M) / K) + delta]`.
pub fn lasso_lambda_rule(sigma: f64, n: usize, m: usize, k: usize, delta: f64) -> f64 {
    2.0 * sigma * (((2.0 * (n as f64).ln() + 2.0 * (m as f64).ln()) / k as f64).sqrt() + delta)
}

/// Error bound `(6 sigma / kappa) sqrt(s) [(2 log N + 2 log M) / K + delta]`
/// for the shifted LASSO under the restricted eigenvalue property.
pub fn lasso_bound(
    sigma: f64,
    kappa: f64,
    s: usize,
    n: usize,
    m: usize,
    k: usize,
    delta: f64,
) -> f64 {
    6.0 * sigma / kappa
        * (s as f64).sqrt()
        * ((2.0 * (n as f64).ln() + 2.0 * (m as f64).ln()) / k as f64 + delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepCertificate {
    /// Sign-pattern enumeration over the cone; exact up to eigensolver
    /// accuracy.
    Exact,
    /// Random cone directions only; an optimistic estimate, not a bound.
    Sampled { directions: usize },
}

#[derive(Clone, Debug)]
pub struct RepEstimate {
    pub kappa: f64,
    pub certificate: RepCertificate,
}

/// Restricted eigenvalue constant: minimizes `|Px|^2 / (K |x|^2)` over the
/// cone `|x_{S^c}|_1 <= 3 |x_S|_1`.
///
/// Exact mode (NM <= 12) enumerates sign patterns; on each face of the cone
/// the minimizer is an eigenvector of the restricted (or cone-projected)
/// Gram matrix, so scanning all candidates is exhaustive. Larger problems
/// fall back to sampled directions, flagged as heuristic.
pub fn rep_constant(design: &DesignMatrix, support: &[usize]) -> Result<RepEstimate, Error> {
    if support.is_empty() {
        return Err(Error::EmptySupportSet);
    }
    let d = design.dim();
    if support.iter().any(|&s| s >= d) {
        return Err(Error::DimensionMismatch("support index out of range".into()));
    }
    let q = design.plans.transpose() * &design.plans / design.k() as f64;
    if d <= 12 {
        if let Some(kappa) = rep_exact(&q, d, support) {
            return Ok(RepEstimate {
                kappa,
                certificate: RepCertificate::Exact,
            });
        }
    }
    Ok(rep_sampled(&q, d, support, 20_000))
}

fn in_cone(x: &[f64], in_support: &[bool]) -> bool {
    let mut on: f64 = 0.0;
    let mut off: f64 = 0.0;
    for (v, &s) in x.iter().zip(in_support) {
        if s {
            on += v.abs();
        } else {
            off += v.abs();
        }
    }
    off <= 3.0 * on + 1e-9
}

fn rep_exact(q: &DMatrix<f64>, d: usize, support: &[usize]) -> Option<f64> {
    let mut in_support = vec![false; d];
    for &s in support {
        in_support[s] = true;
    }
    let mut best: Option<f64> = None;
    let mut consider = |x: &[f64], value: f64| {
        if in_cone(x, &in_support) {
            let v = value.max(0.0);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    };
    // Sign patterns in {-1, 0, +1}^d, first nonzero fixed positive
    // (antipodal patterns are equivalent).
    let total = 3usize.pow(d as u32);
    for code in 1..total {
        let mut pattern = Vec::with_capacity(d);
        let mut rem = code;
        for _ in 0..d {
            pattern.push((rem % 3) as i32 - 1);
            rem /= 3;
        }
        match pattern.iter().find(|&&p| p != 0) {
            Some(&first) if first > 0 => {}
            _ => continue,
        }
        let members: Vec<usize> = (0..d).filter(|&i| pattern[i] != 0).collect();
        let t = members.len();
        // Restricted Gram on the free coordinates.
        let q_tt = DMatrix::from_fn(t, t, |a, b| q[(members[a], members[b])]);
        let sign_ok = |x: &[f64]| {
            members
                .iter()
                .enumerate()
                .all(|(a, &i)| x[a] * pattern[i] as f64 >= -1e-12)
        };
        let embed = |x: &[f64]| {
            let mut full = vec![0.0; d];
            for (a, &i) in members.iter().enumerate() {
                full[i] = x[a];
            }
            full
        };
        // Face interior: eigenvectors of the restricted Gram.
        let eig = q_tt.clone().symmetric_eigen();
        for (col, &value) in eig.eigenvalues.iter().enumerate() {
            let v: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
            for cand in [v.clone(), v.iter().map(|x| -x).collect::<Vec<f64>>()] {
                if sign_ok(&cand) {
                    consider(&embed(&cand), value);
                }
            }
        }
        // Cone boundary active: eigenvectors of the Gram projected onto the
        // hyperplane h'x = 0 with h_i = sign_i * (1 off-support, -3 on).
        if t >= 2 {
            let h: Vec<f64> = members
                .iter()
                .map(|&i| pattern[i] as f64 * if in_support[i] { -3.0 } else { 1.0 })
                .collect();
            if let Some(basis) = hyperplane_basis(&h) {
                let b = DMatrix::from_fn(t, t - 1, |r, c| basis[c][r]);
                let projected = b.transpose() * &q_tt * &b;
                let eig = projected.symmetric_eigen();
                for (col, &value) in eig.eigenvalues.iter().enumerate() {
                    let w = eig.eigenvectors.column(col);
                    let x = &b * w;
                    let xv: Vec<f64> = x.iter().copied().collect();
                    for cand in [xv.clone(), xv.iter().map(|v| -v).collect::<Vec<f64>>()] {
                        if sign_ok(&cand) {
                            consider(&embed(&cand), value);
                        }
                    }
                }
            }
        }
    }
    best
}

/// Orthonormal basis of the hyperplane orthogonal to `h`.
fn hyperplane_basis(h: &[f64]) -> Option<Vec<Vec<f64>>> {
    let t = h.len();
    let norm: f64 = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let unit: Vec<f64> = h.iter().map(|v| v / norm).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(t - 1);
    for i in 0..t {
        let mut v = vec![0.0; t];
        v[i] = 1.0;
        // Remove the h component, then the components of the basis so far.
        let hv: f64 = unit[i];
        for (a, u) in v.iter_mut().zip(&unit) {
            *a -= hv * u;
        }
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (a, u) in v.iter_mut().zip(b) {
                *a -= dot * u;
            }
        }
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            for a in v.iter_mut() {
                *a /= n;
            }
            basis.push(v);
            if basis.len() == t - 1 {
                break;
            }
        }
    }
    Some(basis)
}

fn rep_sampled(q: &DMatrix<f64>, d: usize, support: &[usize], directions: usize) -> RepEstimate {
    let mut in_support = vec![false; d];
    for &s in support {
        in_support[s] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let mut best = f64::INFINITY;
    for _ in 0..directions {
        let mut x: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let on: f64 = x
            .iter()
            .zip(&in_support)
            .filter(|(_, &s)| s)
            .map(|(v, _)| v.abs())
            .sum();
        let off: f64 = x
            .iter()
            .zip(&in_support)
            .filter(|(_, &s)| !s)
            .map(|(v, _)| v.abs())
            .sum();
        if off > 3.0 * on {
            let scale = 3.0 * on / off;
            for (v, &s) in x.iter_mut().zip(&in_support) {
                if !s {
                    *v *= scale;
                }
            }
        }
        let xv = DVector::from_vec(x);
        let norm2: f64 = xv.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            continue;
        }
        let quad = (q * &xv).dot(&xv);
        best = best.min(quad / norm2);
    }
    RepEstimate {
        kappa: best.max(0.0),
        certificate: RepCertificate::Sampled { directions },
    }
}

/// Ground truth kept alongside a generated design.
#[derive(Clone, Debug)]
pub struct GeneratedData {
    pub design: DesignMatrix,
    pub marginals: Vec<MarginalPair>,
    /// Exact optimal plans, one per record.
    pub plans: Vec<Matrix>,
    /// Exact noise-free totals.
    pub alphas: Vec<crate::rational::Rational>,
}

/// Samples `K` marginal pairs, solves the forward problem exactly and emits
/// noisy totals `y = <c, pi> + sigma * eps` with i.i.d. standard normal
/// noise. Fully deterministic under the seed: each record draws the
/// marginals first, then (iff `sigma > 0`) a single normal deviate.
pub fn generate_noisy_observations(
    cost: &Matrix,
    sampler: &mut dyn FnMut(&mut ChaCha8Rng) -> MarginalPair,
    k: usize,
    sigma: f64,
    seed: u64,
) -> Result<GeneratedData, Error> {
    if sigma < 0.0 {
        return Err(Error::Unsupported("sigma must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (cost.nrows(), cost.ncols());
    let mut rows = Vec::with_capacity(k);
    let mut y = Vec::with_capacity(k);
    let mut marginals = Vec::with_capacity(k);
    let mut plans = Vec::with_capacity(k);
    let mut alphas = Vec::with_capacity(k);
    for _ in 0..k {
        let marg = sampler(&mut rng);
        let sol = solve_forward(cost, &marg)?;
        let row: Vec<f64> = sol.plan.to_col_major().iter().map(to_f64).collect();
        let mut value = to_f64(&sol.value);
        if sigma > 0.0 {
            let eps: f64 = rng.sample(StandardNormal);
            value += sigma * eps;
        }
        rows.push(row);
        y.push(value);
        marginals.push(marg);
        plans.push(sol.plan);
        alphas.push(sol.value);
    }
    let design = DesignMatrix::from_parts(n, m, rows, y, Some(sigma))?;
    Ok(GeneratedData {
        design,
        marginals,
        plans,
        alphas,
    })
}

/// Uniform random marginals with denominators bounded by `granularity`:
/// integer weights in `1..=granularity`, normalized exactly.
pub fn random_marginal_sampler(
    n: usize,
    m: usize,
    granularity: u64,
) -> impl FnMut(&mut ChaCha8Rng) -> MarginalPair {
    use crate::rational::rat_int;
    move |rng: &mut ChaCha8Rng| {
        let draw = |rng: &mut ChaCha8Rng, len: usize| {
            let weights: Vec<i64> = (0..len)
                .map(|_| rng.gen_range(1..=granularity) as i64)
                .collect();
            let total: i64 = weights.iter().sum();
            let total = rat_int(total);
            weights
                .into_iter()
                .map(|w| rat_int(w) / &total)
                .collect::<Vec<_>>()
        };
        MarginalPair::new(draw(rng, n), draw(rng, m))
    }
}

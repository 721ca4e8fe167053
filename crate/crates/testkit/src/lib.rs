//! Independent brute-force oracles and shared fixtures for testing the main
//! crate. Oracles deliberately re-derive results from definitions (acyclic
//! support patterns, exhaustive basic points, proximal gradient, grid
//! search) and never call the implementation paths they are used to check.

pub mod fixtures;
pub mod oracles;

use iot_core::rational::{rat, Rational};
use iot_core::types::{MarginalPair, Matrix};

/// Rational vector literal from `(numerator, denominator)` pairs.
pub fn rvec(entries: &[(i64, i64)]) -> Vec<Rational> {
    entries.iter().map(|&(p, q)| rat(p, q)).collect()
}

/// Rational matrix literal from rows of `(numerator, denominator)` pairs.
pub fn rmat(rows: &[&[(i64, i64)]]) -> Matrix {
    Matrix::from_rows(rows.iter().map(|r| rvec(r)).collect()).expect("rectangular literal")
}

/// Marginal pair literal.
pub fn rmarg(mu: &[(i64, i64)], nu: &[(i64, i64)]) -> MarginalPair {
    MarginalPair::new(rvec(mu), rvec(nu))
}

//! Inverse optimal transport on finite spaces.
//!
//! Given optimal-transport observations — total costs, transport plans,
//! dual potentials, in any combination — this crate decides exactly whether
//! the underlying cost matrix is identifiable, recovers it (or an exact
//! description of the consistent set) in arbitrary-precision rational
//! arithmetic, and estimates it statistically from noisy totals.
//!
//! Module map:
//! - [`rational`], [`types`]: exact scalars and the shared value types.
//! - [`polytope`]: extreme points and faces of transportation polytopes.
//! - [`lp`]: exact rational linear programming (simplex with Bland's rule).
//! - [`forward`]: the forward transport problem, Monge machinery, shifts.
//! - [`identify`]: the identifiability procedures, one per information mode.
//! - [`estimate`]: least squares, confidence intervals and a shifted LASSO
//!   for noisy totals (floating point).
//! - [`files`]: the JSON observation/report formats used by the CLI.

pub mod error;
pub mod estimate;
pub mod files;
pub mod forward;
pub mod identify;
pub mod lp;
pub mod polytope;
pub mod rational;
pub mod types;

pub use error::Error;
pub use rational::{parse_rational, rat, rat_int, render_rational, Rational};
pub use types::{
    validate_observation_set, AmbiguityClass, CostClass, IdentifiabilityReport, MarginalPair,
    Matrix, ObservationRecord, ObservationSet, PotentialPair, Verdict, Violation,
};

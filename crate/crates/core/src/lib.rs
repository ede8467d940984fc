//! Exact aggregation of incomplete cardinal ratings and incomplete ordinal
//! rankings.
//!
//! The crate computes three aggregates over a set of judges' evaluations:
//!
//! * the consensus rating, minimizing the total normalized projected
//!   Cook-Kress (NPCK) distance to the judges' ratings;
//! * a convexified consensus ranking, minimizing a convex majorant of the
//!   total normalized projected Kemeny-Snell (NPKS) distance;
//! * the combined rating-ranking pair, minimizing both at once.
//!
//! All three reduce to minimizing a sum of convex piecewise-linear functions
//! of pairwise score differences over a bounded integer grid, which
//! [`solver::minimize`] does exactly. Arithmetic is carried out on exact
//! rationals throughout.

pub mod analysis;
pub mod cli;
pub mod distance;
pub mod error;
pub mod model;
pub mod numeric;
pub mod penalty;
pub mod solver;

pub use error::{Error, Result};
pub use numeric::Rational;

//! Certified computation and analysis of the Flint Hills partial sums
//! `S_N = Σ 1/(n³ sin² n)` through the distance `d(n) = dist(n, πZ)`.
//!
//! Every numeric quantity is carried as a [`Ball`] (midpoint plus radius on
//! a fixed binary grid), so inequalities between sums are decided with
//! certified error bounds instead of being assumed.

pub mod ball;
pub mod blocks;
pub mod diophantine;
pub mod error;
pub mod precision;
pub mod series;

pub use ball::Ball;
pub use error::{Error, Result};
pub use precision::{required_bits, DistSample, PrecisionContext, DEFAULT_BITS};

//! Distributionally robust non-adaptive k-of-n testing.
//!
//! Tests have unknown pass probabilities known only to lie in intervals.
//! The crate evaluates the expected cost of a testing order, finds
//! worst-case probabilities for an order (exactly or approximately), and
//! builds orders that minimize that worst case.

pub mod adversary;
pub mod cost;
pub mod error;
pub mod harness;
pub mod model;
pub mod pbd;
pub mod solver;

pub use error::{Error, Result};
pub use model::{Instance, Permutation, ProbVector, Test, Window};

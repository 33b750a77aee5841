//! Randers metrics `F(x, ξ) = sqrt(g(ξ, ξ)) + ω(ξ)` on coordinate charts.
//!
//! The crate parses metric and 1-form components from a small expression
//! language, evaluates them with exact forward-mode jets, traces forward and
//! backward geodesics, and classifies pairs of Randers metrics by whether
//! they share their oriented (or unoriented) geodesics.

// NaN-rejecting comparisons (`!(x > 0.0)`) and index loops over small
// matrices are deliberate; the builder methods on `Node` simplify as they go
// and are not operator impls.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::should_implement_trait)]

pub mod error;
pub mod expr;
pub mod gallery;
pub mod equivalence;
pub mod geodesic;
pub mod geometry;
pub mod problem;
pub mod randers;

pub use error::{Error, Result};

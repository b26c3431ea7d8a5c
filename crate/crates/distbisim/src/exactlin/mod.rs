//! Exact rational linear algebra: canonical column bases, LP feasibility
//! and convex-geometry tests (vertex checks, hull vertex enumeration).
//!
//! Everything in this module is exact. No floating point is used anywhere;
//! all decisions (independence, feasibility, extremality) are discontinuous
//! in their inputs and must not be subject to rounding.

mod basis;
mod convex;
mod lp;
mod matrix;
mod rational;

pub use basis::{reduce, ColumnBasis};
pub use convex::{hull_vertices, is_vertex};
pub use lp::{lp_feasible, Cmp, Constraint};
pub use matrix::{annihilates, dot, is_zero_vec, solve_linear_combination, Matrix};
pub use rational::{format_rat, parse_rat, rat, Rat};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinAlgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("point is not a member of the cloud")]
    PointNotInCloud,
    #[error("invalid rational literal {literal:?}: {reason}")]
    BadRational { literal: String, reason: String },
}

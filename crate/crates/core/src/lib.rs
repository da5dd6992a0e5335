// NaN-rejecting guards are written as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod lambda_op;
pub mod multiindex;
pub mod problem;
pub mod properties;
pub mod solver;
pub mod sphere;
pub mod symfunc;

pub use error::{Error, Result};

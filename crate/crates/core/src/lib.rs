//! Conformal reduction of high-dimensional Kuramoto (Lohe) oscillators.

// `!(a < b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod conformal;
pub mod diagnostics;
pub mod error;
pub mod integrate;
pub mod model;
pub mod numlin;
pub mod reduction;
pub mod sampling;
pub mod scenario;

pub use error::{Error, Result};

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod classify;
pub mod datasets;
pub mod dr;
pub mod error;
pub mod eval;
pub mod graphs;
pub mod kernels;
pub mod linalg;
pub mod seed;

pub use error::{Error, Result};
pub use linalg::Matrix;

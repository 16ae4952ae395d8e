// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convex;
pub mod cz;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod maximal;
pub mod tauberian;

pub use error::{Error, Result};

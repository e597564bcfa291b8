// `!(x > 0.0)` is the NaN-rejecting guard used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dense_eig;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod problems;
pub mod projection;
pub mod rng;
pub mod solvers;
pub mod subspaces;

pub use error::{Error, Result};

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod eigensolve;
pub mod error;
pub mod experiments;
pub mod geometry;
mod quad;
pub mod scenario;
pub mod specfun;
pub mod weights;

pub use error::{Error, Result};

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod laplace;
pub mod mc;
pub mod quad;
pub mod relax;
pub mod renewal;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

// Negated comparisons are the NaN-rejecting form of the range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod capacity;
pub mod channel;
pub mod error;
pub mod mc;
pub mod numerics;
pub mod protocols;
pub mod stream;

pub use error::{Error, Result};

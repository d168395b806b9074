// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domains;
pub mod error;
pub mod geometry;
pub mod network;
pub mod oracle;
pub mod training;
pub mod trial;

pub use error::{Error, Result};

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod error;
pub mod interaction;
pub mod numeric;
pub mod par;
pub mod potential;
pub mod sampler;
pub mod shift;
pub mod specification;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};

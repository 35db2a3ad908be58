//! Achievement sets of conditionally convergent series in the plane.

// `!(a < b)` is used on floats on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod achieve;
pub mod catalog;
pub mod error;
pub mod exactnum;
pub mod extreme;
pub mod levy;
pub mod raster;
pub mod verify;

pub use error::{Error, Result};

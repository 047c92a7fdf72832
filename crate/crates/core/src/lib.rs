#![no_std]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coefficients;
pub mod eigen;
pub mod error;
pub mod extrapolate;
pub mod harness;
pub mod kernel;
pub mod montecarlo;
pub mod quadrature;
pub mod special;
pub mod subordinator;

pub use coefficients::StableIndex;
pub use error::{Error, Result};

//! Numerical laboratory for the radial cubic wave equation in 1+3
//! dimensions, worked in the Penrose-compactified picture.

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coords;
pub mod duhamel;
pub mod error;
pub mod functional;
pub mod noninv;
pub mod penrose;
pub mod picard;
pub mod profiles;
pub mod projection;
pub mod quadrature;
pub mod sobolev;
pub mod sphere;

pub use error::{Error, Result};

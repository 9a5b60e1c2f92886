//! Exact and certified computations for real interpolation on finite weighted
//! sequence couples.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod couples;
pub mod error;
pub mod harness;
pub mod janson;
pub mod lp;
pub mod matrix;
pub mod nuclear;
pub mod numeric;
pub mod par;
pub mod qcfun;
pub mod rearrange;
pub mod repr;
pub mod retract;

pub use couples::{CoupleOperator, Exponent, OpNorm, Side, WeightedCouple};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use par::Execution;
pub use qcfun::{QcFunction, SparseSequence};

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod feasibility;
pub mod invariants;
pub mod ode;
pub mod quadrature;
pub mod superposition;

pub use error::{Error, Result};

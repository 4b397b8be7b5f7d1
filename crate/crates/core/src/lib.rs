//! Noncolliding Brownian motion in the Weyl chamber, its densities and
//! samplers, with statistical cross-checks against matrix-valued processes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densities;
pub mod error;
pub mod estimate;
pub mod haar;
pub mod io;
pub mod linalg;
pub mod paths;
pub mod quadrature;
pub mod rng;
pub mod sde;
pub mod verify;

pub use error::{Error, Result};

//! Numerical laboratory for Wegner-type eigenvalue concentration bounds of
//! continuum Anderson Hamiltonians with one or two interacting particles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod geometry;
pub mod operator;
pub mod random_field;
pub mod experiments;
pub mod seeding;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};

//! Evolutionary limit of a chemostat model in which a trait-structured
//! population competes for several resources.
//!
//! The crate has two sides that are checked against each other:
//!
//! * [`pde`] integrates the small-mutation equation for the log-density
//!   `phi_eps = eps log u_eps`, with resources at quasi-equilibrium.
//! * [`hj`] solves the limiting Hamilton-Jacobi equation under the constraint
//!   `max phi = 0`, where the resources are read off the metastable measure of
//!   the zero set computed by [`metastable`].
//!
//! [`analysis`] compares the two across an `eps` sweep, and [`cli`] wires the
//! solvers to scenario files and CSV artifacts.

// `!(a <= b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod hj;
pub mod metastable;
pub mod model;
pub mod pde;

pub use error::{Error, Result};

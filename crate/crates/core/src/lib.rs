//! Branching Brownian motion confined to tubes around continuous paths.
//!
//! - [`path`]: tube specifications and the built-in catalog
//! - [`rates`]: deterministic rate and error functionals
//! - [`sim`]: forward simulation of the killed process
//! - [`spine`]: the size-biased measure and its spine
//! - [`estimators`]: Monte Carlo estimators and statistical checks
//! - [`cli`]: the command-line front end

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod path;
pub mod rates;
pub mod rng;
pub mod sim;
pub mod spine;
pub mod stats;

pub use error::{Error, Result};

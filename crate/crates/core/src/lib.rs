//! Kinetic operators for a weakly interacting Fermi gas on the momentum lattice.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bosonization;
pub mod cli;
pub mod collision;
pub mod distribution;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod lattice;
pub mod model;
pub mod mollifier;
pub mod potential;
pub mod states;

pub use error::{Error, Result};

/// Engine version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

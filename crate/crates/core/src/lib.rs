//! Near-field reconfigurable intelligent surface simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod beamforming;
pub mod channel;
pub mod cli;
pub mod codebook;
pub mod config;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod metasurface;
pub mod training;

pub use error::{Error, Result};

//! Bloch–Redfield 2D electronic spectroscopy of an excitonic dimer whose
//! sites couple to spatially correlated phonon noise.

// Range checks are written as `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod beating;
pub mod config;
pub mod disorder;
pub mod eigen;
pub mod error;
pub mod gridio;
pub mod liouville;
pub mod model;
pub mod pathways;
pub mod response;
pub mod units;

//! Numerical laboratory for alloy-type random Schrödinger operators whose
//! single-site potential may change sign.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod lattice;
pub mod model;
pub mod spectral;
pub mod stats;
pub mod toeplitz;

pub use error::{LabError, Result};

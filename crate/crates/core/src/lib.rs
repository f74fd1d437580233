//! Finite element laboratory for a linearized compressible flow coupled to
//! an elastic beam: operator assembly in the energy inner product, spectral
//! and resolvent analysis, implicit time stepping and proof diagnostics.

pub mod beam;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod fe;
pub mod fields;
pub mod generator;
pub mod grid;
pub mod linalg;
pub mod output;
pub mod plot;
pub mod spectral;
pub mod verify;

pub use error::{FsiError, Result};

//! Two-time transmittance statistics of turbulent free-space optical
//! channels, and the quantum figures of merit that follow from them.
//!
//! The simulation side samples sparse-spectrum phase screens, propagates a
//! Gaussian beam through them by the split-step method at a list of
//! wind-driven transverse shifts, and records the aperture transmittance of
//! every realization at every shift. The analysis side turns those samples
//! into probability distributions of transmittance, moments and correlation
//! radii, and evaluates Gaussian entanglement, the CHSH parameter and
//! photocounting nonclassicality after adaptive selection.

pub mod analysis;
pub mod config;
pub mod cv;
pub mod dump;
pub mod dv;
pub mod error;
pub mod grid;
pub mod interp;
pub mod nonclassicality;
pub mod propagation;
pub mod provenance;
pub mod quadrature;
pub mod screens;
pub mod seed;
pub mod selfcheck;
pub mod statistics;
pub mod turbulence;

pub use error::{Error, Result};

/// Version string embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Quantum and classical arrival-time observables for a freely evolving
//! Gaussian ensemble.

pub mod arrival;
pub mod classical;
pub mod cli;
pub mod config;
pub mod error;
pub mod fd;
pub mod mc;
pub mod quad;
pub mod quantum;
pub mod sweep;
pub mod units;
pub mod wigner;

pub use error::{Error, Result};
pub use units::{make_params, uncertainty_product, CutoffPolicy, DetectorConfig, PacketParams};

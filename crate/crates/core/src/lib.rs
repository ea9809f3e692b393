//! Constrained Tucker2 hybrid beamforming for single-user OFDM mmWave
//! massive MIMO, with a clustered channel generator, reference designs and a
//! Monte Carlo sum-rate harness.

pub mod channel;
pub mod dump;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod tucker;

pub use error::{Error, Result};

//! Differential amplify-and-forward relaying with DBPSK over time-varying
//! Rayleigh channels: channel generation, the relay link, non-coherent
//! detection, closed-form BER analysis and Monte Carlo estimation.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod config;
pub mod detect;
pub mod error;
pub mod montecarlo;
pub mod relaylink;
pub mod specfun;

pub use error::{DafError, Result};

//! Transmit antenna selection for downlink multiuser MIMO with linear
//! zero-forcing and Tomlinson-Harashima precoding.
//!
//! The crate bundles the numerical kernels (pivoted Gram-Schmidt QR,
//! Gauss-Jordan inversion), four antenna selectors, the precoders, a flop
//! model for the selectors and a reproducible Monte Carlo engine for BER and
//! sum-rate curves. The `mimo-tas` binary exposes all of it on the command line.

pub mod channel;
pub mod cli;
pub mod error;
pub mod flops;
pub mod linalg;
pub mod precode;
pub mod qam;
pub mod select;
pub mod sim;

pub use error::{Error, Result};

//! Monte-Carlo and analytic tools for fault-tolerant GHZ-state preparation
//! and parity measurement on a repetition-code probe.

pub mod bits;
pub mod core_model;
pub mod decoder;
pub mod error;
pub mod fisher;
pub mod meas_sim;
pub mod prep_sim;
pub mod rep_code;
pub mod threshold;

pub use bits::{BitVector, SyndromeBits};
pub use core_model::{derive_effective_noise, EffectiveNoise, NoiseModel, NoiseParams};
pub use error::{Error, Result};

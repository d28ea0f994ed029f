//! Secrecy rates and feedback-encryption simulation for modulo-additive
//! wiretap channels, plus numerics for the mod-Λ lattice channel.

pub mod channels;
pub mod error;
pub mod feedback_sim;
pub mod files;
pub mod info_theory;
pub mod lattice;
pub mod rng;
pub mod secrecy_rates;
pub mod stats;

pub use error::{Error, ErrorKind, Result};

//! Punctured ring convolutional codes over Z_M combined with continuous
//! phase modulation: encoders, joint trellis, decoders, error-event
//! analysis, puncture search and Monte Carlo simulation.

pub mod bound;
pub mod catalog;
pub mod cpm;
pub mod decode;
pub mod error;
pub mod ring;
pub mod search;
pub mod sim;
pub mod trellis;

pub use error::{Error, Result};

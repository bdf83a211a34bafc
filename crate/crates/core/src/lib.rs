//! Many-body model of a composite quantum emitter and its radiative cascade.

pub mod cascade;
pub mod coupling;
pub mod error;
pub mod experiments;
pub mod lindblad;
pub mod manybody;
pub mod metrics;
pub mod pipeline;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};

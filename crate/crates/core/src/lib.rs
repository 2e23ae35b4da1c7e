//! Spiking-network simulator with memristive synapses trained by mPES.

pub mod config;
pub mod device;
pub mod error;
pub mod kv;
pub mod learning;
pub mod metrics;
pub mod model;
pub mod nef;
pub mod signals;
pub mod sweep;
pub mod synapse;

pub use error::{Error, Result};

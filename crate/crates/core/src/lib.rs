//! Simulator, metrics and Sound Direction Map (SDM) encoder for multi-goal
//! audio navigation on occupancy-grid scenes.

pub mod agents;
pub mod audio;
pub mod env;
pub mod episode;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod scene;
pub mod sdm;
pub mod seed;

pub use error::{Error, Result};

/// Version string recorded in every output header.
pub const TOOL_VERSION: &str = concat!("sdmnav ", env!("CARGO_PKG_VERSION"));

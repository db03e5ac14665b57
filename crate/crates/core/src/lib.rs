//! Multi-objective topology planning for transmission grids.

pub mod blocks;
pub mod dataset;
pub mod error;
pub mod exact;
pub mod metrics;
pub mod moea;
pub mod objectives;
pub mod oracle;

pub use error::{Error, Result};

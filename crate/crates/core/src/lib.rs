//! Multi-agent collective-motion simulator.
//!
//! Each agent tracks every neighbor with a Gaussian filter fed by noisy
//! bearing and apparent-size cues, gated by a soft field of view, and picks
//! its speed and turn rate by descending the expected deviation of one
//! neighbor's distance from a preferred spacing.

pub mod control;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod perception;
pub mod scalar;
pub mod sensitivity;
pub mod world;

pub use error::{Error, ErrorCategory, Result};
pub use harness::{parse_config, run_simulation, RunRecord, SimParams, Simulation};

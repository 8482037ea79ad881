//! Configuration, the run loop, sweeps, persistence and rendering.

pub mod config;
pub mod io;
pub mod render;
pub mod sim;
pub mod sweep;

pub use config::{apply_config, parse_config, SimParams, SizeNoise};
pub use sim::{run_simulation, RunRecord, Simulation};

//! Configuration, file formats and subcommands of the `tablerecon` tool.

pub mod commands;
pub mod config;
pub mod draws_io;
pub mod report;

pub use commands::{cmd_fit, cmd_oracle, cmd_reconstruct, cmd_simulate, cmd_summarize, run_fit, run_oracle, run_simulation};
pub use config::{RunConfig, SimulationConfig};

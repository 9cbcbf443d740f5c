//! Configuration, orchestration and serialization behind the `backlund`
//! binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, summary_line, RunError, COMMANDS};
pub use config::{parse_config, Config, ConfigError};

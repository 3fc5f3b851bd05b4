//! Run configuration, checkpoint I/O and subcommands behind the `qg` binary.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod output;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointError};
pub use commands::{
    cmd_resume, cmd_run, cmd_sweep, cmd_verify_thm1, cmd_verify_thm2, CliError, ResumeOptions,
    Status,
};
pub use config::{parse_config, ConfigError, RunConfig};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "QG_OUT_DIR";

//! Configuration parsing, run orchestration and artifact output for shockloop.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod runner;

pub use config::{parse_config, ConfigError, Mode, RunConfig};
pub use runner::{run, RunError};

/// Environment variable that replaces every seed in a configuration.
pub const SEED_ENV: &str = "SHOCKLOOP_SEED";

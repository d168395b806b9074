//! Batch front-end: experiment configuration, execution and artifact export.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use std::path::PathBuf;

pub use commands::{cmd_adf, cmd_compare, cmd_diagnose, cmd_oracle, cmd_solve};
pub use config::{MethodConfig, MethodKind, Overrides, RunConfig, OUTPUT_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] helmtrial::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("cannot serialise configuration: {0}")]
    Serialize(#[from] toml::ser::Error),

    #[error("cannot write json: {0}")]
    Json(#[from] serde_json::Error),
}

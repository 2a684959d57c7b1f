//! Library half of the `magnonics` command-line tool: config parsing and
//! validation, sweep orchestration, CSV/SVG emission. The binary in
//! `main.rs` is a thin argument-parsing wrapper so that integration tests
//! and fuzz targets can drive everything in-process.

// validation guards are written `!(x > y)` on purpose: they must reject
// NaN, which the inverted comparison would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod csvout;
pub mod svg;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration file, override or argument (exit code 2).
    #[error("config error: {0}")]
    Config(String),
    /// Numerical or diagnostic failure while running (exit code 3).
    #[error("{0}")]
    Numeric(#[from] magnonics::Error),
    /// Filesystem failure (exit code 4).
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

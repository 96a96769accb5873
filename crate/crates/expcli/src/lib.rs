//! Configuration-driven experiment runner built on `gtnsgdm-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod grid;

pub use config::ExperimentConfig;
pub use error::CliError;

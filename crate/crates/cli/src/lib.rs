//! Command-line front end for the chimera concept-blending pipeline.
//!
//! The core crate holds all algorithmic behavior; this crate owns everything
//! that touches an operating system: configuration files, prompt caching on
//! disk, subprocess model adapters, the live knowledge-base client, dataset
//! ingestion, report artifacts, and image output.

pub mod backends;
pub mod cache;
pub mod commands;
pub mod conceptnet;
pub mod config;
pub mod dataset;
pub mod errors;
pub mod render;
pub mod report;

pub use commands::{dispatch, run_from};
pub use errors::CliError;

/// Entry point for the `chimera` binary; returns the process exit code.
pub fn run() -> i32 {
    commands::run()
}

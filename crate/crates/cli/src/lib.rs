//! Command-line driver: dataset ingestion, stage commands, the ablation
//! harness and report emission.

pub mod config;
pub mod error;
pub mod ingest;
pub mod io;
pub mod plot;
pub mod stages;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

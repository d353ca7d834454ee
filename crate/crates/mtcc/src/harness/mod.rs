//! Data ingestion, configuration, metrics, and the CLI.

pub mod cli;
pub mod config;
pub mod metrics;
pub mod profiles;
pub mod rng;

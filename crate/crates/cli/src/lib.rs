//! Experiment harness behind the `imba` binary: config files, single runs,
//! sweeps and plot-data export.

pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod runner;
pub mod sweep;

pub use config::{ExperimentConfig, FileConfig};
pub use error::CliError;
pub use manifest::Manifest;
pub use sweep::SweepSpec;

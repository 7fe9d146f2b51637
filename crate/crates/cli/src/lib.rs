//! Experiment runner: reads JSON configurations, runs grids of cells in
//! parallel with deterministic seeding, and writes CSV rows, a JSON summary
//! and optional SVG plots.

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod report;
pub mod run;

pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;
pub use run::{run, RunOptions, RunOutcome};

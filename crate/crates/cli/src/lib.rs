//! Batch pipeline over the `d2nn` library: `prepare`, `train`, `cache`,
//! `prune` and `report`, each reading the previous stage's artifacts from
//! one run directory.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;
pub mod stages;

pub use config::{Overrides, Profile, RunConfig, DATA_DIR_ENV};
pub use error::{CliError, CliResult, FailureKind};
pub use stages::{cmd_cache, cmd_prepare, cmd_prune, cmd_report, cmd_train, Context};

//! Config-driven experiment runner behind the `hp-lab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod manifest;
pub mod run;

pub use config::{parse_config, Command, ConfigError, ExperimentConfig};
pub use manifest::{read_manifest, verify_outputs, RunManifest};
pub use run::{run, StageError, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PASS, EXIT_STATISTICAL};

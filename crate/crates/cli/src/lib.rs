//! Declarative experiment runner: `key = value` run configurations, a registry
//! of experiment kinds, and reproducible output directories with manifests.

pub mod config;
pub mod kinds;
pub mod registry;
pub mod run;

pub use config::{parse_config, parse_config_as, ConfigError, ConfigErrorKind, ConfigErrors, RunConfig, Value};
pub use registry::{builtin, Experiment, Job, Registry};
pub use run::{execute, run, RunError, RunManifest, RunOptions, Outputs, OUTPUT_ROOT_VAR};

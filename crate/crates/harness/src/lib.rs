//! Config-driven experiment runner for `rhbb-core`.
//!
//! A suite is loaded from a TOML file ([`config::load_config`]), executed in
//! parallel across (run, seed) pairs ([`suite::run_suite`]) and written as one
//! CSV trace per pair. [`summary`] and [`plot`] post-process a directory of
//! traces; [`report`] evaluates the analytic bounds for a suite.

pub mod config;
pub mod error;
pub mod plot;
pub mod report;
pub mod suite;
pub mod summary;

pub use config::{load_config, parse_config, ExperimentSuite, Overrides, PlannedRun};
pub use error::{ConfigError, HarnessError};
pub use suite::{run_suite, RunOutcome, RunStatus, SuiteResult};

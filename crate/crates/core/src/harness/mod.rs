//! Scenario presets, the run driver and output files.

pub mod config;
pub mod report;
pub mod runner;
pub mod scenario;

pub use config::{OutputFormat, Overrides, Settings};
pub use report::DiagnosticsRecord;
pub use runner::{run_scenario, verify_scenario, RunReport};
pub use scenario::{Scenario, ScenarioName};

//! Benchmark scenarios: configuration, builtin geometries, the run driver,
//! output writers and post-processing of crack paths.

pub mod analysis;
pub mod catalog;
pub mod config;
pub mod geometry;
pub mod output;
pub mod run;

pub use catalog::{build_mesh, scenario_catalog, SCENARIOS};
pub use config::{load_config, ConfigError, ScenarioConfig};
pub use run::{run_scenario, RunArtifacts, RunError, RunOptions, RunSummary};

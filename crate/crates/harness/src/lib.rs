//! Scenario configuration, Monte-Carlo execution and CSV export for the
//! distributed Kalman filter in `dkf-core`.

pub mod config;
pub mod error;
pub mod export;
pub mod report;
pub mod runner;

pub use config::ScenarioConfig;
pub use error::{HarnessError, Result};
pub use runner::{run_scenario, RunMetrics};

//! Command-line harness: scenario configs, order-log ingestion, simulation,
//! policy comparison and value-function fitting, all writing CSV.

pub mod commands;
pub mod config;

pub use commands::{compare, estimate_lambda, fit_adp, parse_policy_list, simulate};
pub use config::{Scenario, ScenarioConfig};

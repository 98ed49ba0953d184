//! Scenario files, experiment batches and CSV output for the command line.

pub mod csv;
pub mod experiment;
pub mod scenario;

pub use csv::{read_csv, write_csv};
pub use experiment::{run_experiment, run_experiment_with, ExperimentOutput, Method, ResultRow, RunOptions};
pub use scenario::{parse_scenario, parse_scenario_str, Experiment, Scenario, Tolerances};

//! Scenario files, experiment orchestration and CSV output.

mod config;
mod experiment;

pub use config::{Background, Scenario, ScenarioConfig, BUILTIN};
pub use experiment::{
    attacker_for, build_network, emit_series_csv, run_experiment, sweep, table_configs, table_row, write_experiment,
    write_series_csv, write_summary_csv, write_sweep, write_table, Experiment, Pipeline, SweepSummary, TableRow, Truth,
    SERIES_HEADER, SUMMARY_HEADER,
};

//! Instance generation and experiment drivers.

pub mod experiment;
pub mod generate;

pub use experiment::{
    greedy_ratio_order, rows_to_csv, run_greedy_ratio_experiment, run_oracle_suite, write_report,
    CheckCount, ExperimentConfig, Family, GreedyPoint, GreedyReport, OracleReport, RatioSummary,
    Row, CSV_COLUMNS,
};
pub use generate::{gen_bad_example, gen_random, BadExampleParams, FREE_TEST_PROB};

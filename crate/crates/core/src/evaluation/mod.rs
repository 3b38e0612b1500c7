//! Split plans, repeated experiments, significance testing and tables.

mod runner;
mod splits;
mod stats;
mod table;

pub use runner::{run_experiment, EegNetMethod, ExperimentOutput, FoldRecord, Method};
pub use splits::{make_splits, Fold, LosoTest, Scheme, SplitOptions, SplitPlan};
pub use stats::{accuracy, paired_t_test, TTest};
pub use table::{emit_table, Column, ResultsTable, TableFormat, SIGNIFICANCE_LEVEL, SUMMARY_MAGIC};

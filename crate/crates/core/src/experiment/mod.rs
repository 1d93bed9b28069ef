//! The three experiment schedules (self-learning, dynamic environment,
//! label noise), their configuration and their output files.

mod config;
mod contexts;
mod output;
mod parallel;
mod run;

pub use config::{DynamicConfig, ExperimentConfig, NoiseConfig};
pub use contexts::{variant_sizes, Family, Workbench, BUDGET_SPAN, REQUIRED_ACCURACY};
pub use output::{
    aggregate, emit_plotdata, events_jsonl, mean_stderr, meta_json, parse_results, results_csv, write_outputs,
    SeriesKey, SeriesPoint, VERSION,
};
pub use parallel::parallel_map;
pub use run::{mtl_arm, run_experiment, test_block_sizes, EventRecord, Experiment, ResultRow, RunOutput, CL_ARM};

//! Experiment orchestration: base vs. augmented arms over generated
//! instances, paired statistics, certification, and output files.

mod config;
mod experiment;
mod rate;
pub mod seeds;
mod stats;

pub use config::ExperimentConfig;
pub use experiment::{
    read_instances_csv, run_experiment, run_instance, write_instances_csv, ExperimentReport, InstanceOutcome,
    InstanceRow, PairedResult, RunChecks, SummaryTable, CERTIFIER_TARGET,
};
pub use rate::verify_rate_bound;
pub use stats::{classify_delta, mcnemar_exact_one_sided, mcnemar_log_p, median, median_index, Label, TIE_TOLERANCE};

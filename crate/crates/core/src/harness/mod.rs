//! Experiment harness behind the `sigreg` binary: single runs, ablation
//! grids, gradient checks and report merging.

mod ablate;
mod config;
mod gradcheck;
mod report;
mod train;

pub use ablate::{
    cmd_ablate, group_means, AblationAxes, AblationConfig, AblationOutcome, AggregateRow, CellKey, GroupSummary,
    AGGREGATE_FILE, AGGREGATE_SUMMARY_FILE,
};
pub use config::{
    apply_override, output_root, DatasetSpec, ModelPreset, ModelSpec, RegularizerChoice, RegularizerSpec, RunConfig,
    OUTPUT_ROOT_ENV,
};
pub use gradcheck::{
    compare_with_finite_differences, run_gradcheck, CheckResult, CheckTarget, GradcheckReport, GradcheckSpec,
    ShapeCase,
};
pub use report::{cmd_report, Report, ReportFailure, Series, REPORT_METRICS, REPORT_SCHEMA_VERSION};
pub use train::{
    cmd_train, evaluate, prepare_data, read_metrics_csv, read_summary, train, write_metrics_csv, write_run_dir,
    Divergence, RunMetadata, RunOutcome, RunRecord, RunStatus, RunSummary, CHECKPOINT_FILE, CONFIG_FILE,
    METRICS_FILE, SUMMARY_FILE, SUMMARY_SCHEMA_VERSION, TIMING_FILE,
};

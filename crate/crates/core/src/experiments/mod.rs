//! Seeded experiment plans: parameter sweeps, paired sample comparisons and
//! single-point simulations with CSV and JSON output.

mod output;
mod plan;
mod run;

pub use output::{
    ComparisonSinks, Sink, SweepSinks, COMPARISON_HEADER, TRACE_HEADER, TRIAL_HEADER,
};
pub use plan::{
    parse_plan, parse_plan_str, stream_id, ExperimentPlan, Grid, GridPoint, InitialPlan, Outputs,
    ProtocolSettings,
};
pub use run::{
    compare_samples, load, ols, run_simulation, run_sweep, scaling_fit, summarise_point,
    ComparisonReport, ComparisonResult, ComparisonRow, ComparisonSummary, GridSummary,
    ScalingFit, SweepResult, SweepSummary, TrialRecord, FIT_MIN_LOAD, FIT_MIN_POINTS,
};

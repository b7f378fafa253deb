//! Log schema and the analytics built on it: throughput, error rates,
//! stroke counts, motion accounting, learning curves and MT-vs-ID fits.

mod log;
mod report;
mod stats;

pub use log::{
    export_csv, format_float, parse_csv, CsvError, CsvErrorKind, Device, RunHeader, RunLog,
    TrialRecord, COLUMNS, SCHEMA_VERSION,
};
pub use report::{
    learning_curve, pooled, summary_table, ConditionSummary, CurvePoint, SummaryRow, SummaryTable,
    ROW_LABELS, WARMUP_TRIALS,
};
pub use stats::{
    error_rate, fit_linear, mean, median, motion_accounting, mt_points, sample_sd, stroke_stats,
    throughput, wilson_interval, ErrorRate, Interval, MotionSummary, RegressionFit, StatsError,
    StrokeStats, ThroughputSummary, Z95,
};

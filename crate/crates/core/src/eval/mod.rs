//! Displacement metrics and the baseline-versus-fusion comparison.

pub mod metrics;
pub mod report;

pub use metrics::{ade, fde};
pub use report::{
    instance_seeds, min_k_curve, table_report, CurveRow, ErrorPair, EvalCase, InstanceResult, MetricReport, MinKCurve,
    SelectionTable,
};

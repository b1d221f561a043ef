//! Everything measured on a run: tip counts, approval times, weight growth,
//! exit probabilities, confidence levels and lambda scaling.

pub mod exit;
pub mod fit;
pub mod record;
pub mod scaling;

pub use exit::{confidence_level, exit_frequencies, exit_profile, ExitProfile};
pub use fit::{fit_exponential, fit_growth_phases, fit_line, ExpFit, GrowthPhases, LineFit};
pub use record::{
    check_tip_approval_relation, run_recorded, summarize_approval, summarize_tips, tip_growth_slope, ApprovalSample,
    MetricsRecord, MetricsRecorder, RecordOptions, Summary, TrendFit, WeightTrajectory, DEFAULT_ORPHAN_HORIZON,
};
pub use scaling::{loglog_slope, run_batch, scaling_study, BatchSummary, RunSummary, ScalingStudy};

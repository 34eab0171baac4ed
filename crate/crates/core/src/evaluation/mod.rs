//! Measurement apparatus: agreement metrics, diagnostic alignment,
//! suspicion calibration, inter-rater reliability, sampling, ablation and
//! the realism rater.

mod ablation;
mod alignment;
mod auc;
mod confusion;
mod human;
mod icc;
mod metrics;
mod realism;
mod sampling;

pub use ablation::{
    ablation_run, trajectory, write_delta_trust_csv, write_trust_by_round_csv, AblationArm, AblationReport, ArmReport,
    BackendFactory, RoundTrust, TrustTrajectory,
};
pub use alignment::{diagnostic_alignment, AlignmentReport, Leakage};
pub use auc::{pearson, rank_auc, suspicion_alignment, SuspicionAlignment};
pub use confusion::{confusion, ConfusionMatrix};
pub use human::{final_suspicion, mean_by_record, read_human_scores, score_matrix, HumanScore};
pub use icc::icc_two_way;
pub use metrics::{classification_metrics, ClassMetrics, MetricsReport};
pub use realism::{
    presentation_order, rate_realism, realism_table, DimensionSummary, RealismDimension, RealismScore, RealismTable,
};
pub use sampling::stratified_sample;
pub use stats_tests::{cohens_d, mann_whitney_u, pearson_p_value, MannWhitney};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label {0} is not in the label order")]
    UnknownLabel(String),
    #[error("confusion matrix has no counts")]
    DegenerateMatrix,
    #[error("only one class present; AUC is undefined")]
    DegenerateLabels,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("stratum {stratum} has {available} records, {requested} requested")]
    InsufficientStratum { stratum: String, requested: usize, available: usize },
    #[error("record {0} has no ground truth")]
    MissingGroundTruth(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

//! Metrics, cross-validation plans and significance tests.

pub mod cv;
pub mod metrics;
pub mod stats;

pub use cv::{plan, stratified_kfold, CvPlan, CvSettings};
pub use metrics::{
    auc_roc, binary_auc, classification_metrics, mcc, per_class_scores, AucReport, ClassScores, ConfusionMatrix,
    Metrics,
};
pub use stats::{
    average_ranks, chi_square_sf, friedman, mcnemar, mcnemar_counts, nemenyi_critical_difference, significance_marker,
    FriedmanResult, McnemarResult,
    SignificanceReport,
};

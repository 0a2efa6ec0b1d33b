//! Fuzzy c-means quality clustering.
//!
//! Selected features are z-scored, clustered into five fuzzy clusters, and the
//! clusters are named by ordering their centers along the moisture axis.

mod fcm;
mod label;
mod model;
mod report;

pub use fcm::{fuzzy_cmeans, memberships_from_sq_dists, FcmFit, FcmParams, DEFAULT_SEED};
pub use label::{ParseLabelError, QualityLabel};
pub use model::{assign_labels, fcm_membership, fit_norm, ClusterModel, NormParam, QualityAssessment};
pub use report::{cluster_report, ClusterReport};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("{predicted} predictions but {truth} ground-truth labels")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("two cluster centers tie on both moisture and mean gray")]
    TiedCenters,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Fits a model on `points` and assesses every point with it.
pub fn fit_and_assess(
    points: &[crate::features::SelectedFeatures],
    params: &FcmParams,
) -> Result<(ClusterModel, Vec<QualityAssessment>), ClusterError> {
    let model = ClusterModel::fit(points, params)?;
    let assessments = points.iter().map(|p| fcm_membership(&model, p)).collect();
    Ok((model, assessments))
}

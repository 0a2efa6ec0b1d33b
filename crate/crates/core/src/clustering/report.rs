use serde::Serialize;

use super::{ClusterError, QualityAssessment, QualityLabel};

/// Confusion matrix with rows = true label and columns = predicted label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub confusion: [[usize; 5]; 5],
    /// Percent of each predicted cluster that is wrong (column-wise); 0 for empty clusters.
    pub class_error: [f64; 5],
    /// Percent of each true class that is misassigned (row-wise); 0 for absent classes.
    pub truth_error: [f64; 5],
    pub overall_error: f64,
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl ClusterReport {
    pub fn from_confusion(confusion: [[usize; 5]; 5]) -> Self {
        let mut class_error = [0.0; 5];
        let mut truth_error = [0.0; 5];
        let (mut wrong, mut total) = (0, 0);
        for c in 0..5 {
            let col: usize = (0..5).map(|r| confusion[r][c]).sum();
            class_error[c] = percent(col - confusion[c][c], col);
            let row: usize = confusion[c].iter().sum();
            truth_error[c] = percent(row - confusion[c][c], row);
            wrong += col - confusion[c][c];
            total += col;
        }
        Self {
            confusion,
            class_error,
            truth_error,
            overall_error: percent(wrong, total),
        }
    }

    pub fn from_labels(predicted: &[QualityLabel], truth: &[QualityLabel]) -> Result<Self, ClusterError> {
        if predicted.len() != truth.len() {
            return Err(ClusterError::LengthMismatch {
                predicted: predicted.len(),
                truth: truth.len(),
            });
        }
        let mut confusion = [[0usize; 5]; 5];
        for (p, t) in predicted.iter().zip(truth) {
            confusion[t.index()][p.index()] += 1;
        }
        Ok(Self::from_confusion(confusion))
    }
}

pub fn cluster_report(
    assessments: &[QualityAssessment],
    truth: &[QualityLabel],
) -> Result<ClusterReport, ClusterError> {
    let predicted: Vec<QualityLabel> = assessments.iter().map(|a| a.label).collect();
    ClusterReport::from_labels(&predicted, truth)
}

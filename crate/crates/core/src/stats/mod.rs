//! ANOVA and Tukey HSD feature selection, and a CART classifier.

mod anova;
mod ptukey;
mod tree;

pub use anova::{one_way_anova, tukey_hsd, AnovaResult, GroupedSamples, TukeyPair, TukeyResult};
pub use ptukey::{ptukey, tukey_p_value};
pub use tree::{predict_tree, train_tree, DecisionTree, TreeNode, DEFAULT_MAX_DEPTH, MIN_NODE_SIZE};

use serde::Serialize;
use thiserror::Error;

use crate::clustering::QualityLabel;
use crate::features::{QualityFeatures, FEATURE_NAMES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid samples: {0}")]
    InvalidSamples(String),
    #[error("within-group variance is zero while group means differ")]
    ZeroWithinVariance,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("training set is empty or has a single class")]
    EmptyTraining,
}

/// Per-feature outcome of the selection procedure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureTest {
    pub index: usize,
    pub name: &'static str,
    pub anova_p: f64,
    pub f_stat: f64,
    pub tukey: Vec<TukeyPair>,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub alpha: f64,
    pub features: Vec<FeatureTest>,
    pub kept: Vec<usize>,
}

/// Groups one feature column by label, in label order, skipping absent labels.
fn group_column(column: &[f64], labels: &[QualityLabel]) -> GroupedSamples {
    let groups = QualityLabel::ALL
        .into_iter()
        .filter_map(|label| {
            let values: Vec<f64> = column
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == label)
                .map(|(&v, _)| v)
                .collect();
            (!values.is_empty()).then_some((label, values))
        })
        .collect();
    GroupedSamples { groups }
}

/// Keeps a feature when its ANOVA p is below `alpha` and no Tukey pair has p above `alpha`.
///
/// Zero within-group variance with distinct group means counts as p = 0 for the
/// ANOVA; the Tukey pairs then get p = 0 for unequal means and p = 1 otherwise.
pub fn select_features(
    features: &[QualityFeatures],
    labels: &[QualityLabel],
    alpha: f64,
) -> Result<SelectionReport, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    if features.len() != labels.len() {
        return Err(StatsError::LengthMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    let rows: Vec<[f64; 11]> = features.iter().map(|f| f.to_array()).collect();
    let mut tests = Vec::with_capacity(FEATURE_NAMES.len());
    for (index, name) in FEATURE_NAMES.iter().enumerate() {
        let column: Vec<f64> = rows.iter().map(|r| r[index]).collect();
        let samples = group_column(&column, labels);
        let (anova_p, f_stat, tukey) = match one_way_anova(&samples) {
            Ok(a) => (a.p_value, a.f_stat, tukey_hsd(&samples, alpha)?.pairs),
            Err(StatsError::ZeroWithinVariance) => {
                (0.0, f64::INFINITY, anova::degenerate_pairs(&samples))
            }
            Err(e) => return Err(e),
        };
        let kept = anova_p < alpha && tukey.iter().all(|p| p.p_value <= alpha);
        tests.push(FeatureTest {
            index,
            name,
            anova_p,
            f_stat,
            tukey,
            kept,
        });
    }
    let kept = tests.iter().filter(|t| t.kept).map(|t| t.index).collect();
    Ok(SelectionReport {
        alpha,
        features: tests,
        kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// 30 images per class; `means[f][c]` is the class-c mean of feature f, unit spread.
    fn dataset(means: &[[f64; 5]; 11], seed: u64) -> (Vec<QualityFeatures>, Vec<QualityLabel>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for label in QualityLabel::ALL {
            for _ in 0..30 {
                let mut v = [0.0; 11];
                for (f, m) in means.iter().enumerate() {
                    v[f] = m[label.index()] + unit.sample(&mut rng);
                }
                rows.push(QualityFeatures::from_array(v));
                labels.push(label);
            }
        }
        (rows, labels)
    }

    const SEPARATED: [f64; 5] = [0.0, 10.0, 20.0, 30.0, 40.0];

    #[test]
    fn separated_feature_kept_constant_feature_dropped() {
        let mut means = [SEPARATED; 11];
        means[4] = [7.0; 5];
        let (rows, labels) = dataset(&means, 1);
        let report = select_features(&rows, &labels, 0.05).unwrap();
        assert!(report.features[4].anova_p > 0.05);
        assert_eq!(report.kept, vec![0, 1, 2, 3, 5, 6, 7, 8, 9, 10]);
    }

    #[test]
    fn single_overlapping_pair_is_dropped_by_tukey() {
        let mut means = [SEPARATED; 11];
        // Good and NormalDry share a mean; the other classes stay apart.
        means[4] = [0.0, 20.0, 20.0, 30.0, 40.0];
        let (rows, labels) = dataset(&means, 2);
        let report = select_features(&rows, &labels, 0.05).unwrap();
        let rlc = &report.features[4];
        assert!(rlc.anova_p < 1e-10);
        let worst = rlc.tukey.iter().max_by(|a, b| a.p_value.total_cmp(&b.p_value)).unwrap();
        assert_eq!((worst.a, worst.b), (QualityLabel::NormalDry, QualityLabel::Good));
        assert!(!rlc.kept);
        assert!(report.kept.iter().all(|&i| i != 4));
    }

    #[test]
    fn invariant_under_affine_rescaling() {
        let mut means = [SEPARATED; 11];
        means[7] = [0.0, 0.0, 20.0, 30.0, 40.0];
        means[9] = [0.0, 0.5, 1.0, 1.5, 2.0];
        let (rows, labels) = dataset(&means, 3);
        let scaled: Vec<QualityFeatures> = rows
            .iter()
            .map(|f| {
                let mut v = f.to_array();
                v.iter_mut().enumerate().for_each(|(i, x)| *x = *x * (0.1 + i as f64) - 50.0);
                QualityFeatures::from_array(v)
            })
            .collect();
        let a = select_features(&rows, &labels, 0.05).unwrap();
        let b = select_features(&scaled, &labels, 0.05).unwrap();
        assert_eq!(a.kept, b.kept);
    }

    #[test]
    fn input_checks() {
        let (rows, labels) = dataset(&[SEPARATED; 11], 4);
        assert_eq!(select_features(&rows, &labels, 1.0).unwrap_err(), StatsError::InvalidAlpha(1.0));
        assert!(matches!(
            select_features(&rows[1..], &labels, 0.05),
            Err(StatsError::LengthMismatch { .. })
        ));
    }
}

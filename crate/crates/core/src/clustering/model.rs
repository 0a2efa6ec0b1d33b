use serde::{Deserialize, Serialize};

use super::fcm::{fuzzy_cmeans, memberships_from_sq_dists, sq_dist, FcmParams};
use super::{ClusterError, QualityLabel};
use crate::features::{SelectedFeatures, SELECTED_MEAN, SELECTED_MOISTURE};

const DIM: usize = 7;
const K: usize = 5;
/// Moisture (and mean gray) coordinates closer than this count as tied.
const TIE_EPS: f64 = 1e-9;

/// Per-feature z-score parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParam {
    pub mean: f64,
    pub std: f64,
}

impl NormParam {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Population mean and standard deviation per column; a zero deviation becomes 1.
pub fn fit_norm(points: &[[f64; DIM]]) -> [NormParam; DIM] {
    let n = points.len() as f64;
    std::array::from_fn(|j| {
        let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        NormParam {
            mean,
            std: if std > 0.0 && std.is_finite() { std } else { 1.0 },
        }
    })
}

/// Fitted five-class quality model. Centers live in z-scored feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centers: Vec<[f64; DIM]>,
    pub fuzzifier: f64,
    pub norm_params: [NormParam; DIM],
    /// `label_map[c]` is the label of center `c`.
    pub label_map: [QualityLabel; K],
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

/// Label and memberships of one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityAssessment {
    pub label: QualityLabel,
    /// Memberships indexed by label (Dry through Wet).
    pub memberships: [f64; K],
    pub m_quality: f64,
}

impl QualityAssessment {
    /// Builds an assessment from label-indexed memberships; ties go to the wetter label.
    pub fn from_memberships(memberships: [f64; K]) -> Self {
        let mut best = 0;
        for i in 1..K {
            if memberships[i] >= memberships[best] {
                best = i;
            }
        }
        Self {
            label: QualityLabel::ALL[best],
            memberships,
            m_quality: memberships[best],
        }
    }

    pub fn membership(&self, label: QualityLabel) -> f64 {
        self.memberships[label.index()]
    }
}

/// Orders centers by de-normalized moisture and names them Dry through Wet.
///
/// Equal moisture is broken by mean gray, brighter first; equal on both is an error.
pub fn assign_labels(
    centers: &[[f64; DIM]],
    norm: &[NormParam; DIM],
) -> Result<[QualityLabel; K], ClusterError> {
    if centers.len() != K {
        return Err(ClusterError::InvalidModel(format!("expected {K} centers, got {}", centers.len())));
    }
    let key = |c: &[f64; DIM]| {
        (
            norm[SELECTED_MOISTURE].invert(c[SELECTED_MOISTURE]),
            norm[SELECTED_MEAN].invert(c[SELECTED_MEAN]),
        )
    };
    let mut order: Vec<usize> = (0..K).collect();
    order.sort_by(|&a, &b| {
        let ((ma, ga), (mb, gb)) = (key(&centers[a]), key(&centers[b]));
        if (ma - mb).abs() <= TIE_EPS {
            gb.total_cmp(&ga)
        } else {
            ma.total_cmp(&mb)
        }
    });
    for w in order.windows(2) {
        let ((ma, ga), (mb, gb)) = (key(&centers[w[0]]), key(&centers[w[1]]));
        if (ma - mb).abs() <= TIE_EPS && (ga - gb).abs() <= TIE_EPS {
            return Err(ClusterError::TiedCenters);
        }
    }
    let mut map = [QualityLabel::Good; K];
    for (rank, &c) in order.iter().enumerate() {
        map[c] = QualityLabel::ALL[rank];
    }
    Ok(map)
}

impl ClusterModel {
    /// Z-scores the points, runs fuzzy c-means with five clusters and labels the centers.
    pub fn fit(points: &[SelectedFeatures], params: &FcmParams) -> Result<Self, ClusterError> {
        if params.k != K {
            return Err(ClusterError::InvalidParameter(format!(
                "quality model needs k = {K}, got {}",
                params.k
            )));
        }
        let raw: Vec<[f64; DIM]> = points.iter().map(|p| p.to_array()).collect();
        if raw.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(ClusterError::DegenerateData("non-finite feature values".into()));
        }
        if raw.is_empty() {
            return Err(ClusterError::DegenerateData("no points".into()));
        }
        let norm = fit_norm(&raw);
        let scaled: Vec<Vec<f64>> = raw
            .iter()
            .map(|p| p.iter().zip(&norm).map(|(v, n)| n.apply(*v)).collect())
            .collect();
        let fit = fuzzy_cmeans(&scaled, params)?;
        let centers: Vec<[f64; DIM]> = fit
            .centers
            .iter()
            .map(|c| std::array::from_fn(|j| c[j]))
            .collect();
        let label_map = assign_labels(&centers, &norm)?;
        Ok(Self {
            centers,
            fuzzifier: params.fuzzifier,
            norm_params: norm,
            label_map,
            seed: params.seed,
            tol: params.tol,
            max_iter: params.max_iter,
        })
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.centers.len() != K {
            return Err(ClusterError::InvalidModel(format!("expected {K} centers, got {}", self.centers.len())));
        }
        if !(self.fuzzifier > 1.0) {
            return Err(ClusterError::InvalidModel(format!("fuzzifier {} must exceed 1", self.fuzzifier)));
        }
        if self.norm_params.iter().any(|n| !(n.std > 0.0) || !n.mean.is_finite()) {
            return Err(ClusterError::InvalidModel("normalization std must be positive".into()));
        }
        let mut seen = [false; K];
        for l in self.label_map {
            if std::mem::replace(&mut seen[l.index()], true) {
                return Err(ClusterError::InvalidModel(format!("label {l} assigned twice")));
            }
        }
        Ok(())
    }

    pub fn normalize(&self, f: &SelectedFeatures) -> [f64; DIM] {
        let a = f.to_array();
        std::array::from_fn(|j| self.norm_params[j].apply(a[j]))
    }

    /// Center of a label in original feature units.
    pub fn center_of(&self, label: QualityLabel) -> SelectedFeatures {
        let c = self.label_map.iter().position(|&l| l == label).expect("label map is a bijection");
        SelectedFeatures::from_array(std::array::from_fn(|j| self.norm_params[j].invert(self.centers[c][j])))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ClusterError> {
        let model: Self = serde_json::from_str(s).map_err(|e| ClusterError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

/// Memberships of one feature vector under the model, reordered by label.
pub fn fcm_membership(model: &ClusterModel, f: &SelectedFeatures) -> QualityAssessment {
    let z = model.normalize(f);
    let d2: Vec<f64> = model.centers.iter().map(|c| sq_dist(&z, c)).collect();
    let by_center = memberships_from_sq_dists(&d2, model.fuzzifier);
    let mut by_label = [0.0; K];
    for (c, u) in by_center.into_iter().enumerate() {
        by_label[model.label_map[c].index()] = u;
    }
    QualityAssessment::from_memberships(by_label)
}

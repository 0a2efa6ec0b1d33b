//! Block-wise fingerprint quality features.
//!
//! Every feature is computed per 16x16 foreground block and averaged over the
//! foreground blocks of the image. The full vector [`QualityFeatures`] holds 11
//! candidates; [`SelectedFeatures`] is the 7-feature subset used for clustering.

mod basic;
mod nfiq;
mod olsen;
mod ridge;

pub use basic::{mean_gray, moisture, moisture_with_lambda, rvau, variance_gray, RVAU_CAP};
pub use nfiq::uniformity_contrast;
pub use olsen::{gabor_features, olsen_features, radial_power_spectrum, OlsenFeatures};
pub use ridge::{rlc, rotated_binary_block, rvu};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgcore::{self, ForegroundMask, GrayImage, ImgError};

/// Mean ridge-pixel percentage of a good-quality block.
pub const LAMBDA: f64 = 51.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error(transparent)]
    Image(#[from] ImgError),
    #[error("no foreground blocks")]
    NoForeground,
}

/// Names of the 11 candidate features in vector order.
pub const FEATURE_NAMES: [&str; 11] = [
    "moisture",
    "mean",
    "variance",
    "rvau",
    "rlc",
    "uniformity",
    "contrast",
    "rps",
    "rvu",
    "gabor_q",
    "gabor_shen",
];

/// Positions in [`FEATURE_NAMES`] of the selected subset, in selected order
/// (uniformity, contrast, mean, moisture, variance, rvau, rvu).
pub const SELECTED_INDICES: [usize; 7] = [5, 6, 1, 0, 2, 3, 8];

/// Names of the 7 selected features in selected order.
pub const SELECTED_NAMES: [&str; 7] = [
    "uniformity",
    "contrast",
    "mean",
    "moisture",
    "variance",
    "rvau",
    "rvu",
];

/// Index of moisture inside [`SelectedFeatures::to_array`].
pub const SELECTED_MOISTURE: usize = 3;
/// Index of mean gray inside [`SelectedFeatures::to_array`].
pub const SELECTED_MEAN: usize = 2;

/// The 11-dimensional candidate feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityFeatures {
    pub moisture: f64,
    pub mean: f64,
    pub variance: f64,
    pub rvau: f64,
    pub rlc: f64,
    pub uniformity: f64,
    pub contrast: f64,
    pub rps: f64,
    pub rvu: f64,
    pub gabor_q: f64,
    pub gabor_shen: f64,
}

impl QualityFeatures {
    pub fn to_array(&self) -> [f64; 11] {
        [
            self.moisture,
            self.mean,
            self.variance,
            self.rvau,
            self.rlc,
            self.uniformity,
            self.contrast,
            self.rps,
            self.rvu,
            self.gabor_q,
            self.gabor_shen,
        ]
    }

    pub fn from_array(v: [f64; 11]) -> Self {
        Self {
            moisture: v[0],
            mean: v[1],
            variance: v[2],
            rvau: v[3],
            rlc: v[4],
            uniformity: v[5],
            contrast: v[6],
            rps: v[7],
            rvu: v[8],
            gabor_q: v[9],
            gabor_shen: v[10],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// The 7 features kept for quality clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeatures {
    pub uniformity: f64,
    pub contrast: f64,
    pub mean: f64,
    pub moisture: f64,
    pub variance: f64,
    pub rvau: f64,
    pub rvu: f64,
}

impl SelectedFeatures {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.uniformity,
            self.contrast,
            self.mean,
            self.moisture,
            self.variance,
            self.rvau,
            self.rvu,
        ]
    }

    pub fn from_array(v: [f64; 7]) -> Self {
        Self {
            uniformity: v[0],
            contrast: v[1],
            mean: v[2],
            moisture: v[3],
            variance: v[4],
            rvau: v[5],
            rvu: v[6],
        }
    }

    /// Places the subset back into a full vector; dropped features are zero.
    pub fn embed(&self) -> QualityFeatures {
        let mut full = [0.0; 11];
        for (&idx, v) in SELECTED_INDICES.iter().zip(self.to_array()) {
            full[idx] = v;
        }
        QualityFeatures::from_array(full)
    }
}

/// Drops rlc, rps, gabor_q and gabor_shen.
pub fn project(f: &QualityFeatures) -> SelectedFeatures {
    SelectedFeatures {
        uniformity: f.uniformity,
        contrast: f.contrast,
        mean: f.mean,
        moisture: f.moisture,
        variance: f.variance,
        rvau: f.rvau,
        rvu: f.rvu,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub var_threshold: f64,
    pub lambda: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            var_threshold: imgcore::DEFAULT_VAR_THRESHOLD,
            lambda: LAMBDA,
        }
    }
}

/// Feature vector together with the number of foreground blocks it was computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureReport {
    pub features: QualityFeatures,
    pub foreground_blocks: usize,
}

/// Extracts the 11 features with default configuration.
pub fn extract(img: &GrayImage) -> Result<QualityFeatures, FeatureError> {
    Ok(extract_with(img, &FeatureConfig::default())?.features)
}

/// Segments, binarizes and computes every feature.
pub fn extract_with(img: &GrayImage, cfg: &FeatureConfig) -> Result<FeatureReport, FeatureError> {
    let mask = imgcore::segment_foreground(img, cfg.var_threshold)?;
    let features = extract_masked(img, &mask, cfg)?;
    Ok(FeatureReport {
        features,
        foreground_blocks: mask.count(),
    })
}

/// Computes every feature over a precomputed foreground mask.
pub fn extract_masked(
    img: &GrayImage,
    mask: &ForegroundMask,
    cfg: &FeatureConfig,
) -> Result<QualityFeatures, FeatureError> {
    let binary = imgcore::otsu_binarize_or_blank(img, mask)?;
    let (uniformity, contrast) = uniformity_contrast(img, &binary, mask)?;
    let olsen = olsen_features(img, &binary, mask)?;
    Ok(QualityFeatures {
        moisture: moisture_with_lambda(&binary, mask, cfg.lambda)?,
        mean: mean_gray(img, mask)?,
        variance: variance_gray(img, mask)?,
        rvau: rvau(&binary, mask)?,
        rlc: rlc(img, &binary, mask)?,
        uniformity,
        contrast,
        rps: olsen.rps,
        rvu: olsen.rvu,
        gabor_q: olsen.gabor_q,
        gabor_shen: olsen.gabor_shen,
    })
}

pub(crate) fn check_inputs(
    width: usize,
    height: usize,
    mask: &ForegroundMask,
) -> Result<(), FeatureError> {
    mask.check_geometry(width, height)?;
    if mask.count() == 0 {
        return Err(FeatureError::NoForeground);
    }
    Ok(())
}

/// Averages a per-block statistic over the foreground blocks.
pub(crate) fn foreground_mean(
    mask: &ForegroundMask,
    mut per_block: impl FnMut(usize, usize) -> f64,
) -> Result<f64, FeatureError> {
    let n = mask.count();
    if n == 0 {
        return Err(FeatureError::NoForeground);
    }
    let sum: f64 = mask.foreground_blocks().map(|(bx, by)| per_block(bx, by)).sum();
    Ok(sum / n as f64)
}

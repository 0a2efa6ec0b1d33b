//! Contextual Gabor enhancement and the second-stage extension point.

mod field;
mod filter;

pub use field::{orientation_field, ridge_frequency, FrequencyField, OrientationField, MAX_FREQ, MIN_FREQ};
pub use filter::{gabor_enhance, gabor_kernel, normalize, GABOR_SIGMA, KERNEL_RADIUS};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::QualityAssessment;
use crate::imgcore::{self, ForegroundMask, GrayImage, ImgError};
use crate::qap::{self, QapConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaborError {
    #[error(transparent)]
    Image(#[from] ImgError),
    #[error("image is constant")]
    ConstantImage,
    #[error("no block has a measurable ridge frequency")]
    NoValidBlocks,
    #[error("second stage {0:?} is not supported")]
    Unsupported(String),
}

/// Enhancement applied after quality-adaptive preprocessing.
pub trait SecondStage {
    fn name(&self) -> &'static str;
    fn apply(&self, img: &GrayImage, mask: &ForegroundMask, qa: &QualityAssessment) -> Result<GrayImage, GaborError>;
}

/// Orientation- and frequency-tuned Gabor filtering.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaborStage;

impl SecondStage for GaborStage {
    fn name(&self) -> &'static str {
        "gabor"
    }

    fn apply(&self, img: &GrayImage, mask: &ForegroundMask, _qa: &QualityAssessment) -> Result<GrayImage, GaborError> {
        gabor_with_mask(img, mask)
    }
}

/// Second-stage selector. `Stft` and `Odf` are reserved names without an implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    None,
    Gabor,
    Stft,
    Odf,
}

impl Stage {
    pub fn second_stage(self) -> Result<Option<Box<dyn SecondStage>>, GaborError> {
        match self {
            Stage::None => Ok(None),
            Stage::Gabor => Ok(Some(Box::new(GaborStage))),
            Stage::Stft | Stage::Odf => Err(GaborError::Unsupported(self.to_string())),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::None => "none",
            Stage::Gabor => "gabor",
            Stage::Stft => "stft",
            Stage::Odf => "odf",
        })
    }
}

impl FromStr for Stage {
    type Err = GaborError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Stage::None),
            "gabor" => Ok(Stage::Gabor),
            "stft" => Ok(Stage::Stft),
            "odf" => Ok(Stage::Odf),
            other => Err(GaborError::Unsupported(other.to_string())),
        }
    }
}

/// Orientation field, frequency field and Gabor filtering over a given mask.
pub fn gabor_with_mask(img: &GrayImage, mask: &ForegroundMask) -> Result<GrayImage, GaborError> {
    let of = orientation_field(img, mask)?;
    let ff = ridge_frequency(img, &of, mask)?;
    gabor_enhance(img, &of, &ff, mask)
}

/// Gabor enhancement of the raw image with its own variance segmentation.
pub fn gabor_only(img: &GrayImage, var_threshold: f64) -> Result<GrayImage, GaborError> {
    let mask = imgcore::segment_foreground(img, var_threshold)?;
    gabor_with_mask(img, &mask)
}

/// QAP followed by the selected second stage. The foreground mask for the second
/// stage comes from the raw input so both enhancement paths filter the same region.
pub fn enhance_pipeline(
    img: &GrayImage,
    qa: &QualityAssessment,
    cfg: &QapConfig,
    stage: Stage,
    var_threshold: f64,
) -> Result<GrayImage, GaborError> {
    let second = stage.second_stage()?;
    let pre = qap::preprocess(img, qa, cfg)?;
    match second {
        None => Ok(pre),
        Some(stage) => {
            let mask = imgcore::segment_foreground(img, var_threshold)?;
            stage.apply(&pre, &mask, qa)
        }
    }
}

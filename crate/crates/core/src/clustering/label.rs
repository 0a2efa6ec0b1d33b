use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Fingerprint quality class, ordered along the dry-to-wet axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityLabel {
    Dry,
    NormalDry,
    Good,
    NormalWet,
    Wet,
}

impl QualityLabel {
    pub const ALL: [QualityLabel; 5] = [
        QualityLabel::Dry,
        QualityLabel::NormalDry,
        QualityLabel::Good,
        QualityLabel::NormalWet,
        QualityLabel::Wet,
    ];

    /// Position on the dry-to-wet axis, 0 for Dry through 4 for Wet.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualityLabel::Dry => "dry",
            QualityLabel::NormalDry => "normal_dry",
            QualityLabel::Good => "good",
            QualityLabel::NormalWet => "normal_wet",
            QualityLabel::Wet => "wet",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            QualityLabel::Dry => "D",
            QualityLabel::NormalDry => "ND",
            QualityLabel::Good => "G",
            QualityLabel::NormalWet => "NW",
            QualityLabel::Wet => "W",
        }
    }

    /// Distance from Good on the wetness axis: 0 for Good, 1 for the normal classes, 2 for Dry/Wet.
    pub fn severity(self) -> usize {
        self.index().abs_diff(QualityLabel::Good.index())
    }

    pub fn is_dry_side(self) -> bool {
        self < QualityLabel::Good
    }

    pub fn is_wet_side(self) -> bool {
        self > QualityLabel::Good
    }
}

impl fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown quality label {0:?}")]
pub struct ParseLabelError(pub String);

impl FromStr for QualityLabel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        QualityLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == norm || l.short().eq_ignore_ascii_case(&norm) || l.as_str().replace('_', "") == norm)
            .ok_or_else(|| ParseLabelError(s.to_string()))
    }
}

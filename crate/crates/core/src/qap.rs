//! Quality-adaptive preprocessing: membership-driven unsharp masking, then CLAHE,
//! then Gaussian smoothing.

use serde::{Deserialize, Serialize};

use crate::clustering::{QualityAssessment, QualityLabel};
use crate::imgcore::{self, GrayImage, ImgError, TileSize};

const MIN_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QapConfig {
    pub r_good: f64,
    pub a_good: f64,
    pub c_dry: f64,
    pub c_nd: f64,
    pub c_nw: f64,
    pub c_wet: f64,
    /// CLAHE tiles per image axis.
    pub clahe_tiles: usize,
    pub clahe_clip: f64,
    pub smooth_sigma: f64,
}

impl Default for QapConfig {
    fn default() -> Self {
        Self {
            r_good: 2.0,
            a_good: 1.0,
            c_dry: 1.0,
            c_nd: 0.5,
            c_nw: 0.5,
            c_wet: 1.0,
            clahe_tiles: 8,
            clahe_clip: imgcore::DEFAULT_CLIP_LIMIT,
            smooth_sigma: imgcore::DEFAULT_SMOOTH_SIGMA,
        }
    }
}

impl QapConfig {
    pub fn validate(&self) -> Result<(), ImgError> {
        let coeffs = [self.a_good, self.c_dry, self.c_nd, self.c_nw, self.c_wet];
        if !(self.r_good > 0.0) || coeffs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(ImgError::InvalidParameter(
                "r_good must be positive and all coefficients non-negative".into(),
            ));
        }
        if self.clahe_tiles == 0 || !(self.clahe_clip >= 1.0) || !(self.smooth_sigma > 0.0) {
            return Err(ImgError::InvalidParameter(
                "clahe_tiles must be nonzero, clahe_clip at least 1 and smooth_sigma positive".into(),
            ));
        }
        Ok(())
    }

    fn coefficient(&self, label: QualityLabel) -> f64 {
        match label {
            QualityLabel::Dry => self.c_dry,
            QualityLabel::NormalDry => self.c_nd,
            QualityLabel::Good => 0.0,
            QualityLabel::NormalWet => self.c_nw,
            QualityLabel::Wet => self.c_wet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnsharpParams {
    pub radius: f64,
    pub amount: f64,
}

/// Dry side sharpens harder with a smaller radius, wet side the reverse; Good keeps
/// the base setting. `m_quality` is clamped to [0, 1].
pub fn unsharp_params(label: QualityLabel, m_quality: f64, cfg: &QapConfig) -> UnsharpParams {
    let shift = m_quality.clamp(0.0, 1.0) * cfg.coefficient(label);
    let (radius, amount) = if label.is_dry_side() {
        (cfg.r_good - shift, cfg.a_good + shift)
    } else if label.is_wet_side() {
        (cfg.r_good + shift, cfg.a_good - shift)
    } else {
        (cfg.r_good, cfg.a_good)
    };
    UnsharpParams {
        radius: radius.max(MIN_RADIUS),
        amount: amount.max(0.0),
    }
}

/// Full-frame QAP: unsharp mask with the assessment's parameters, CLAHE, Gaussian smoothing.
pub fn preprocess(img: &GrayImage, qa: &QualityAssessment, cfg: &QapConfig) -> Result<GrayImage, ImgError> {
    cfg.validate()?;
    let p = unsharp_params(qa.label, qa.m_quality, cfg);
    let sharpened = imgcore::unsharp_mask(img, p.radius, p.amount)?;
    let tile = TileSize {
        width: img.width().div_ceil(cfg.clahe_tiles).max(1),
        height: img.height().div_ceil(cfg.clahe_tiles).max(1),
    };
    let equalized = imgcore::clahe(&sharpened, tile, cfg.clahe_clip)?;
    imgcore::gaussian_smooth(&equalized, cfg.smooth_sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use QualityLabel::*;

    fn qa(label: QualityLabel, m: f64) -> QualityAssessment {
        let mut memberships = [(1.0 - m) / 4.0; 5];
        memberships[label.index()] = m;
        QualityAssessment {
            label,
            memberships,
            m_quality: m,
        }
    }

    #[test]
    fn hand_computed_params() {
        let cfg = QapConfig::default();
        assert_eq!(unsharp_params(Good, 0.7, &cfg), UnsharpParams { radius: 2.0, amount: 1.0 });
        assert_eq!(unsharp_params(Dry, 1.0, &cfg), UnsharpParams { radius: 1.0, amount: 2.0 });
        let nw = unsharp_params(NormalWet, 0.8, &cfg);
        assert!((nw.radius - 2.4).abs() < 1e-12 && (nw.amount - 0.6).abs() < 1e-12);
    }

    #[test]
    fn floors_apply_for_large_coefficients() {
        let cfg = QapConfig {
            c_dry: 5.0,
            c_wet: 5.0,
            ..Default::default()
        };
        assert_eq!(unsharp_params(Dry, 1.0, &cfg).radius, 0.5);
        assert_eq!(unsharp_params(Wet, 1.0, &cfg).amount, 0.0);
    }

    #[test]
    fn constant_image_stays_constant() {
        let img = GrayImage::filled(64, 64, 77);
        let out = preprocess(&img, &qa(Dry, 0.9), &QapConfig::default()).unwrap();
        let first = out.data()[0];
        assert!(out.data().iter().all(|&v| v == first));
    }

    fn dry_grating() -> (GrayImage, Vec<bool>) {
        // Period 9 with 3-pixel ridges only 30 levels darker than the valleys.
        let ridge: Vec<bool> = (0..96 * 96).map(|i| (i % 96) % 9 < 3).collect();
        let img = GrayImage::from_fn(96, 96, |x, _| if x % 9 < 3 { 170 } else { 200 });
        (img, ridge)
    }

    fn contrast(img: &GrayImage, ridge: &[bool]) -> f64 {
        let (mut r, mut nr, mut v, mut nv) = (0.0, 0, 0.0, 0);
        for (&p, &is_ridge) in img.data().iter().zip(ridge) {
            if is_ridge {
                r += f64::from(p);
                nr += 1;
            } else {
                v += f64::from(p);
                nv += 1;
            }
        }
        v / nv as f64 - r / nr as f64
    }

    #[test]
    fn dry_grating_gains_contrast() {
        let (img, ridge) = dry_grating();
        let out = preprocess(&img, &qa(Dry, 0.9), &QapConfig::default()).unwrap();
        assert!(contrast(&out, &ridge) > contrast(&img, &ridge));
    }

    #[test]
    fn deterministic() {
        let (img, _) = dry_grating();
        let a = preprocess(&img, &qa(NormalDry, 0.6), &QapConfig::default()).unwrap();
        let b = preprocess(&img, &qa(NormalDry, 0.6), &QapConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn zero_membership_is_good_setting(i in 0usize..5) {
            let cfg = QapConfig::default();
            prop_assert_eq!(unsharp_params(QualityLabel::ALL[i], 0.0, &cfg), UnsharpParams { radius: 2.0, amount: 1.0 });
        }

        #[test]
        fn dry_and_wet_mirror(m in 0.0f64..=1.0) {
            let cfg = QapConfig::default();
            for (d, w) in [(Dry, Wet), (NormalDry, NormalWet)] {
                let (pd, pw) = (unsharp_params(d, m, &cfg), unsharp_params(w, m, &cfg));
                prop_assert!((pd.radius + pw.radius - 4.0).abs() < 1e-12);
                prop_assert!((pd.amount + pw.amount - 2.0).abs() < 1e-12);
            }
        }

        #[test]
        fn monotone_in_membership(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            prop_assume!(a < b);
            let cfg = QapConfig::default();
            for l in [Dry, NormalDry] {
                let (pa, pb) = (unsharp_params(l, a, &cfg), unsharp_params(l, b, &cfg));
                prop_assert!(pb.radius < pa.radius && pb.amount > pa.amount);
            }
            for l in [Wet, NormalWet] {
                let (pa, pb) = (unsharp_params(l, a, &cfg), unsharp_params(l, b, &cfg));
                prop_assert!(pb.radius > pa.radius && pb.amount < pa.amount);
            }
        }

        #[test]
        fn params_stay_in_range(i in 0usize..5, m in 0.0f64..=1.0) {
            let p = unsharp_params(QualityLabel::ALL[i], m, &QapConfig::default());
            prop_assert!((1.0..=3.0).contains(&p.radius) && (0.0..=2.0).contains(&p.amount));
        }
    }
}

use serde::{Deserialize, Serialize};

use super::{EvalError, ScoreSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Acceptance threshold; a score is a match when `score >= threshold`.
    pub threshold: f64,
    pub fmr: f64,
    pub fnmr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EerResult {
    pub eer: f64,
    pub threshold: f64,
    pub roc: Vec<RocPoint>,
}

/// ROC over the sorted distinct scores followed by `+inf`.
pub fn roc_curve(genuine: &[f64], impostor: &[f64]) -> Result<Vec<RocPoint>, EvalError> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    if let Some(bad) = genuine.iter().chain(impostor).find(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(*bad));
    }
    let mut g = genuine.to_vec();
    let mut im = impostor.to_vec();
    g.sort_by(f64::total_cmp);
    im.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = g.iter().chain(&im).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);

    let (ng, ni) = (g.len() as f64, im.len() as f64);
    // Cursors: genuine scores below t, impostor scores below t.
    let (mut gi, mut ii) = (0, 0);
    Ok(thresholds
        .into_iter()
        .map(|t| {
            while gi < g.len() && g[gi] < t {
                gi += 1;
            }
            while ii < im.len() && im[ii] < t {
                ii += 1;
            }
            RocPoint {
                threshold: t,
                fmr: (im.len() - ii) as f64 / ni,
                fnmr: gi as f64 / ng,
            }
        })
        .collect())
}

/// Equal error rate with linear interpolation across the FMR/FNMR crossing.
pub fn compute_eer(scores: &ScoreSet) -> Result<EerResult, EvalError> {
    eer_from_scores(&scores.genuine_scores(), &scores.impostor_scores())
}

pub fn eer_from_scores(genuine: &[f64], impostor: &[f64]) -> Result<EerResult, EvalError> {
    let roc = roc_curve(genuine, impostor)?;
    // FMR - FNMR is 1 at the lowest threshold and -1 at +inf, non-increasing between.
    let k = roc
        .iter()
        .position(|p| p.fmr - p.fnmr <= 0.0)
        .expect("FMR - FNMR reaches -1 at +inf");
    let cur = roc[k];
    let d_cur = cur.fmr - cur.fnmr;
    let (eer, threshold) = if d_cur == 0.0 {
        (cur.fmr, cur.threshold)
    } else {
        let prev = roc[k - 1];
        let d_prev = prev.fmr - prev.fnmr;
        let alpha = d_prev / (d_prev - d_cur);
        let eer = prev.fmr + alpha * (cur.fmr - prev.fmr);
        let threshold = if cur.threshold.is_finite() {
            prev.threshold + alpha * (cur.threshold - prev.threshold)
        } else {
            prev.threshold
        };
        (eer, threshold)
    };
    Ok(EerResult { eer, threshold, roc })
}

/// Percent change of the error rate relative to `eer_base`; positive is an improvement.
pub fn relative_improvement(eer_base: f64, eer_new: f64) -> Result<f64, EvalError> {
    if !(eer_base > 0.0) || !eer_base.is_finite() {
        return Err(EvalError::ZeroBaseline);
    }
    Ok(100.0 * (eer_base - eer_new) / eer_base)
}

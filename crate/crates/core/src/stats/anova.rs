use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::{ptukey::tukey_p_value, StatsError};
use crate::clustering::QualityLabel;

/// One feature's values grouped by quality label.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSamples {
    pub groups: Vec<(QualityLabel, Vec<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub p_value: f64,
    pub df_between: usize,
    pub df_within: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TukeyPair {
    pub a: QualityLabel,
    pub b: QualityLabel,
    pub p_value: f64,
    /// `mean(a) - mean(b)`.
    pub mean_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TukeyResult {
    pub pairs: Vec<TukeyPair>,
}

impl TukeyResult {
    /// Looks up a pair in either order.
    pub fn p(&self, a: QualityLabel, b: QualityLabel) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| (p.a, p.b) == (a, b) || (p.a, p.b) == (b, a))
            .map(|p| p.p_value)
    }
}

struct Summary {
    means: Vec<f64>,
    sizes: Vec<usize>,
    ss_between: f64,
    ss_within: f64,
    df_between: usize,
    df_within: usize,
}

impl GroupedSamples {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.groups.len() < 2 {
            return Err(StatsError::InvalidSamples("need at least 2 groups".into()));
        }
        for (label, values) in &self.groups {
            if values.len() < 2 {
                return Err(StatsError::InvalidSamples(format!(
                    "group {label} has {} values, need at least 2",
                    values.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::InvalidSamples(format!("group {label} has non-finite values")));
            }
        }
        Ok(())
    }

    fn summary(&self) -> Result<Summary, StatsError> {
        self.validate()?;
        let total: usize = self.groups.iter().map(|(_, v)| v.len()).sum();
        let grand = self.groups.iter().flat_map(|(_, v)| v).sum::<f64>() / total as f64;
        let means: Vec<f64> = self
            .groups
            .iter()
            .map(|(_, v)| v.iter().sum::<f64>() / v.len() as f64)
            .collect();
        let sizes: Vec<usize> = self.groups.iter().map(|(_, v)| v.len()).collect();
        let ss_between = means
            .iter()
            .zip(&sizes)
            .map(|(m, &n)| n as f64 * (m - grand).powi(2))
            .sum();
        let ss_within = self
            .groups
            .iter()
            .zip(&means)
            .map(|((_, v), m)| v.iter().map(|x| (x - m).powi(2)).sum::<f64>())
            .sum();
        Ok(Summary {
            df_between: self.groups.len() - 1,
            df_within: total - self.groups.len(),
            means,
            sizes,
            ss_between,
            ss_within,
        })
    }
}

/// Relative size below which a sum of squares counts as zero.
const SS_EPS: f64 = 1e-12;

fn is_zero_within(s: &Summary) -> bool {
    s.ss_within <= SS_EPS * (s.ss_between + s.ss_within)
}

pub fn one_way_anova(samples: &GroupedSamples) -> Result<AnovaResult, StatsError> {
    let s = samples.summary()?;
    if s.ss_between == 0.0 && s.ss_within == 0.0 {
        return Ok(AnovaResult {
            f_stat: 0.0,
            p_value: 1.0,
            df_between: s.df_between,
            df_within: s.df_within,
        });
    }
    if is_zero_within(&s) {
        return Err(StatsError::ZeroWithinVariance);
    }
    let f_stat = (s.ss_between / s.df_between as f64) / (s.ss_within / s.df_within as f64);
    let dist = FisherSnedecor::new(s.df_between as f64, s.df_within as f64)
        .map_err(|e| StatsError::InvalidSamples(e.to_string()))?;
    Ok(AnovaResult {
        f_stat,
        p_value: dist.sf(f_stat).clamp(0.0, 1.0),
        df_between: s.df_between,
        df_within: s.df_within,
    })
}

/// Tukey-Kramer pairwise comparisons, one entry per unordered pair in group order.
pub fn tukey_hsd(samples: &GroupedSamples, alpha: f64) -> Result<TukeyResult, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    let s = samples.summary()?;
    let k = samples.groups.len();
    if s.ss_within == 0.0 && s.ss_between == 0.0 {
        return Ok(TukeyResult {
            pairs: degenerate_pairs(samples),
        });
    }
    if is_zero_within(&s) {
        return Err(StatsError::ZeroWithinVariance);
    }
    let ms_within = s.ss_within / s.df_within as f64;
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = s.means[i] - s.means[j];
            let se = (ms_within / 2.0 * (1.0 / s.sizes[i] as f64 + 1.0 / s.sizes[j] as f64)).sqrt();
            pairs.push(TukeyPair {
                a: samples.groups[i].0,
                b: samples.groups[j].0,
                p_value: tukey_p_value(diff.abs() / se, k, s.df_within as f64),
                mean_diff: diff,
            });
        }
    }
    Ok(TukeyResult { pairs })
}

/// Pairs for data without within-group spread: p = 0 for unequal means, 1 otherwise.
pub(crate) fn degenerate_pairs(samples: &GroupedSamples) -> Vec<TukeyPair> {
    let means: Vec<f64> = samples
        .groups
        .iter()
        .map(|(_, v)| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let k = samples.groups.len();
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = means[i] - means[j];
            pairs.push(TukeyPair {
                a: samples.groups[i].0,
                b: samples.groups[j].0,
                p_value: if diff == 0.0 { 1.0 } else { 0.0 },
                mean_diff: diff,
            });
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use QualityLabel::*;

    fn samples(groups: &[&[f64]]) -> GroupedSamples {
        GroupedSamples {
            groups: groups
                .iter()
                .enumerate()
                .map(|(i, g)| (QualityLabel::ALL[i], g.to_vec()))
                .collect(),
        }
    }

    #[test]
    fn no_variation_gives_f_zero_p_one() {
        let r = one_way_anova(&samples(&[&[5., 5.], &[5., 5.]])).unwrap();
        assert_eq!((r.f_stat, r.p_value), (0.0, 1.0));
        let r = one_way_anova(&samples(&[&[1., 2., 3.], &[1., 2., 3.]])).unwrap();
        assert_eq!(r.f_stat, 0.0);
    }

    #[test]
    fn two_group_textbook_case() {
        let r = one_way_anova(&samples(&[&[1., 2.], &[5., 6.]])).unwrap();
        assert!((r.f_stat - 32.0).abs() < 1e-9);
        // F(1, 2) = T^2 with T ~ t(2), and P(|T| > t) = 1 - t / sqrt(2 + t^2).
        let expected = 1.0 - (32.0f64 / 34.0).sqrt();
        assert!((r.p_value - expected).abs() < 1e-6, "{} vs {expected}", r.p_value);
        assert!((r.p_value - 0.0299).abs() < 1e-3);
    }

    #[test]
    fn zero_within_variance_is_reported() {
        assert_eq!(
            one_way_anova(&samples(&[&[1., 1.], &[2., 2.]])),
            Err(StatsError::ZeroWithinVariance)
        );
    }

    #[test]
    fn rejects_small_groups() {
        assert!(one_way_anova(&samples(&[&[1.], &[2., 3.]])).is_err());
        assert!(one_way_anova(&samples(&[&[1., 2.]])).is_err());
    }

    #[test]
    fn identical_groups_have_tukey_p_one() {
        let g: &[f64] = &[1., 4., 2., 8.];
        let t = tukey_hsd(&samples(&[g, g, g]), 0.05).unwrap();
        assert_eq!(t.pairs.len(), 3);
        for p in &t.pairs {
            assert!((p.p_value - 1.0).abs() < 1e-9, "{}", p.p_value);
        }
    }

    #[test]
    fn separated_pair_is_significant_and_symmetric() {
        let near: &[f64] = &[0.0, 0.1, -0.1, 0.05, -0.05];
        let far: &[f64] = &[10.0, 10.1, 9.9, 10.05, 9.95];
        let t = tukey_hsd(&samples(&[near, near, near, near, far]), 0.05).unwrap();
        assert_eq!(t.pairs.len(), 10);
        assert!(t.p(Dry, Wet).unwrap() < 1e-3);
        assert_eq!(t.p(Dry, Wet), t.p(Wet, Dry));
        assert!(t.p(Dry, NormalDry).unwrap() > 0.9);
    }

    proptest! {
        #[test]
        fn f_is_affine_invariant(
            a in proptest::collection::vec(-50.0f64..50.0, 3..8),
            b in proptest::collection::vec(-50.0f64..50.0, 3..8),
            c in proptest::collection::vec(-50.0f64..50.0, 3..8),
            shift in -1e3f64..1e3,
            scale in 0.01f64..100.0,
        ) {
            let base = samples(&[&a, &b, &c]);
            let moved = GroupedSamples {
                groups: base.groups.iter().map(|(l, v)| (*l, v.iter().map(|x| x * scale + shift).collect())).collect(),
            };
            let (r1, r2) = (one_way_anova(&base).unwrap(), one_way_anova(&moved).unwrap());
            prop_assert!((r1.f_stat - r2.f_stat).abs() <= 1e-6 * (1.0 + r1.f_stat));
            prop_assert!((0.0..=1.0).contains(&r1.p_value));
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn tukey_pair_count(k in 2usize..=5, n in 2usize..6) {
            let groups: Vec<Vec<f64>> = (0..k).map(|g| (0..n).map(|i| (g * 3 + i) as f64).collect()).collect();
            let refs: Vec<&[f64]> = groups.iter().map(|g| g.as_slice()).collect();
            let t = tukey_hsd(&samples(&refs), 0.05).unwrap();
            prop_assert_eq!(t.pairs.len(), k * (k - 1) / 2);
            prop_assert!(t.pairs.iter().all(|p| (0.0..=1.0).contains(&p.p_value)));
        }
    }
}

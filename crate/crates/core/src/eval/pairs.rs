use std::fmt;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// One impression of one finger, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ImageId {
    pub subject: usize,
    pub impression: usize,
}

impl ImageId {
    /// File stem under the `subject_impression` naming rule.
    pub fn stem(&self) -> String {
        format!("{}_{}", self.subject, self.impression)
    }

    /// Parses `subject_impression`, ignoring any further `_suffix` such as `_qap`.
    pub fn parse_stem(stem: &str) -> Option<Self> {
        let mut parts = stem.splitn(3, '_');
        let subject = parts.next()?.parse().ok()?;
        let impression = parts.next()?.parse().ok()?;
        (subject > 0 && impression > 0).then_some(Self { subject, impression })
    }
}

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.subject, self.impression)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub probe: ImageId,
    pub gallery: ImageId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub subjects: usize,
    pub impressions_per_subject: usize,
}

impl DatasetSpec {
    pub const FVC: Self = Self {
        subjects: 100,
        impressions_per_subject: 8,
    };

    pub fn new(subjects: usize, impressions_per_subject: usize) -> Result<Self, EvalError> {
        let spec = Self {
            subjects,
            impressions_per_subject,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.subjects < 2 || self.impressions_per_subject < 2 {
            return Err(EvalError::InvalidSpec {
                subjects: self.subjects,
                impressions: self.impressions_per_subject,
            });
        }
        Ok(())
    }

    pub fn images(&self) -> impl Iterator<Item = ImageId> + '_ {
        (1..=self.subjects).flat_map(move |subject| {
            (1..=self.impressions_per_subject).map(move |impression| ImageId { subject, impression })
        })
    }
}

/// Genuine pairs: every within-subject impression pair. Impostor pairs: first
/// impressions of every subject pair. Both lists are in lexicographic order.
pub fn generate_pairs(spec: &DatasetSpec) -> Result<(Vec<Pair>, Vec<Pair>), EvalError> {
    spec.validate()?;
    let id = |subject, impression| ImageId { subject, impression };
    let n = spec.impressions_per_subject;
    let mut genuine = Vec::with_capacity(spec.subjects * n * (n - 1) / 2);
    for s in 1..=spec.subjects {
        for a in 1..=n {
            for b in a + 1..=n {
                genuine.push(Pair {
                    probe: id(s, a),
                    gallery: id(s, b),
                });
            }
        }
    }
    let mut impostor = Vec::with_capacity(spec.subjects * (spec.subjects - 1) / 2);
    for a in 1..=spec.subjects {
        for b in a + 1..=spec.subjects {
            impostor.push(Pair {
                probe: id(a, 1),
                gallery: id(b, 1),
            });
        }
    }
    Ok((genuine, impostor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn fvc_counts() {
        let (g, i) = generate_pairs(&DatasetSpec::FVC).unwrap();
        assert_eq!((g.len(), i.len()), (2800, 4950));
    }

    #[test]
    fn smallest_spec() {
        let (g, i) = generate_pairs(&DatasetSpec::new(2, 2).unwrap()).unwrap();
        assert_eq!((g.len(), i.len()), (2, 1));
    }

    #[test]
    fn no_repeats_or_self_pairs() {
        let (g, i) = generate_pairs(&DatasetSpec::new(10, 4).unwrap()).unwrap();
        let mut seen = HashSet::new();
        for p in g.iter().chain(&i) {
            assert_ne!(p.probe, p.gallery);
            let key = if p.probe < p.gallery { (p.probe, p.gallery) } else { (p.gallery, p.probe) };
            assert!(seen.insert(key), "{p:?} repeats");
        }
        assert!(g.iter().all(|p| p.probe.subject == p.gallery.subject));
        assert!(i.iter().all(|p| p.probe.subject != p.gallery.subject && p.probe.impression == 1 && p.gallery.impression == 1));
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(DatasetSpec::new(1, 8).is_err());
        assert!(DatasetSpec::new(5, 1).is_err());
    }

    #[test]
    fn stem_round_trip() {
        let id = ImageId { subject: 12, impression: 3 };
        assert_eq!(id.stem(), "12_3");
        assert_eq!(ImageId::parse_stem("12_3"), Some(id));
        assert_eq!(ImageId::parse_stem("12_3_qap_gabor"), Some(id));
        assert_eq!(ImageId::parse_stem("12-3"), None);
        assert_eq!(ImageId::parse_stem("0_1"), None);
    }

    proptest! {
        #[test]
        fn counts_follow_binomials(s in 2usize..40, n in 2usize..12) {
            let (g, i) = generate_pairs(&DatasetSpec::new(s, n).unwrap()).unwrap();
            prop_assert_eq!(g.len(), s * n * (n - 1) / 2);
            prop_assert_eq!(i.len(), s * (s - 1) / 2);
        }
    }
}

//! Synthetic fingerprints for desk-scale runs.
//!
//! The base pattern is a warped set of concentric ridges with a 9-pixel period
//! inside an elliptical foreground. Each quality class changes the ridge width,
//! gray levels and local defects. The degradations are tuned only so the five
//! classes separate in selected-feature space.

use std::f64::consts::PI;
use std::path::Path;

use fpqe_core::clustering::QualityLabel;
use fpqe_core::imgcore::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::CliError;
use crate::pipeline::{create_dir, thread_pool};
use crate::table;

pub const RIDGE_PERIOD: f64 = 9.0;
pub const MIN_SIZE: usize = 64;

#[derive(Debug, Clone, Copy)]
struct Degradation {
    /// Fraction of the ridge period covered by ridge.
    ridge_fraction: f64,
    valley: f64,
    depth: f64,
    /// Disks where ridges fade into the valley level.
    breaks: usize,
    /// Disks where valleys fill up to the ridge level.
    blotches: usize,
}

fn degradation(kind: QualityLabel) -> Degradation {
    let d = |ridge_fraction, valley, depth, breaks, blotches| Degradation {
        ridge_fraction,
        valley,
        depth,
        breaks,
        blotches,
    };
    match kind {
        QualityLabel::Dry => d(0.27, 228.0, 65.0, 10, 0),
        QualityLabel::NormalDry => d(0.39, 214.0, 95.0, 4, 0),
        QualityLabel::Good => d(0.5125, 200.0, 130.0, 0, 0),
        QualityLabel::NormalWet => d(0.635, 180.0, 115.0, 0, 3),
        QualityLabel::Wet => d(0.76, 150.0, 95.0, 0, 8),
    }
}

const NOISE_STD: f64 = 6.0;
const BACKGROUND: f64 = 250.0;
/// Width of the logistic ridge edge in units of cos(phase).
const EDGE_SOFTNESS: f64 = 0.12;

struct Disk {
    x: f64,
    y: f64,
    r2: f64,
}

impl Disk {
    fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.x).powi(2) + (y - self.y).powi(2) <= self.r2
    }
}

const MAX_SHIFT: i32 = 3;
const MAX_ROTATION: f64 = 4.0 * PI / 180.0;

fn stream(seed: u64, kind: QualityLabel, impression: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind.index() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(impression as u64);
    rng
}

/// Deterministic synthetic fingerprint of the given quality class; `size` is
/// clamped to at least [`MIN_SIZE`]. Same as impression 1 of [`synth_impression`].
pub fn synth_fingerprint(kind: QualityLabel, seed: u64, size: usize) -> GrayImage {
    synth_impression(kind, seed, 1, size)
}

/// One impression of the finger identified by `(kind, seed)`. Impressions share the
/// ridge pattern and defects; impressions after the first are rotated by up to four
/// degrees, translated by up to three pixels and carry independent noise.
pub fn synth_impression(kind: QualityLabel, seed: u64, impression: usize, size: usize) -> GrayImage {
    let size = size.max(MIN_SIZE);
    let s = size as f64;
    let mut rng = stream(seed, kind, 0);
    let mut sensor = stream(seed, kind, impression.max(1));
    let (sx, sy, rot) = if impression > 1 {
        (
            f64::from(sensor.random_range(-MAX_SHIFT..=MAX_SHIFT)),
            f64::from(sensor.random_range(-MAX_SHIFT..=MAX_SHIFT)),
            sensor.random_range(-MAX_ROTATION..=MAX_ROTATION),
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    let (rs, rc) = rot.sin_cos();
    let base = degradation(kind);
    let fraction = (base.ridge_fraction + rng.random_range(-0.02..0.02)).clamp(0.05, 0.95);
    let valley = base.valley + rng.random_range(-5.0..5.0);
    let depth = base.depth + rng.random_range(-8.0..8.0);
    let tau = (PI * fraction).cos();

    let (cx, cy) = (s * rng.random_range(0.35..0.65), s * rng.random_range(0.3..0.6));
    let warp_amp = rng.random_range(2.0..6.0);
    let warp_len = s * rng.random_range(0.25..0.5);
    let phase0 = rng.random_range(0.0..2.0 * PI);
    let (ax, ay) = (0.42 * s, 0.47 * s);

    let disks = |count: usize, rmin: f64, rmax: f64, rng: &mut ChaCha8Rng| -> Vec<Disk> {
        (0..count)
            .map(|_| {
                let (t, u) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..0.8f64).sqrt());
                let r = rng.random_range(rmin..rmax);
                Disk {
                    x: s / 2.0 + ax * u * t.cos(),
                    y: s / 2.0 + ay * u * t.sin(),
                    r2: r * r,
                }
            })
            .collect()
    };
    let breaks = disks(base.breaks, 4.0, 7.0, &mut rng);
    let blotches = disks(base.blotches, 6.0, 10.0, &mut rng);
    let noise = Normal::new(0.0, NOISE_STD).expect("positive std");

    let mut values = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            // Sensor placement: rotate about the image centre, then translate.
            let (ux, uy) = (x as f64 - s / 2.0, y as f64 - s / 2.0);
            let (xf, yf) = (s / 2.0 + rc * ux - rs * uy + sx, s / 2.0 + rs * ux + rc * uy + sy);
            let inside = ((xf - s / 2.0) / ax).powi(2) + ((yf - s / 2.0) / ay).powi(2) <= 1.0;
            let v = if inside {
                let dx = xf - cx + warp_amp * (yf / warp_len).sin();
                let dy = yf - cy;
                let phase = 2.0 * PI * (dx * dx + dy * dy).sqrt() / RIDGE_PERIOD + phase0;
                let mut ridge = 1.0 / (1.0 + (-(phase.cos() - tau) / EDGE_SOFTNESS).exp());
                if breaks.iter().any(|d| d.contains(xf, yf)) {
                    ridge *= 0.15;
                }
                if blotches.iter().any(|d| d.contains(xf, yf)) {
                    ridge = ridge.max(0.85);
                }
                valley - depth * ridge + noise.sample(&mut sensor)
            } else {
                BACKGROUND + noise.sample(&mut sensor) / 3.0
            };
            values[y * size + x] = v;
        }
    }
    GrayImage::from_f64(size, size, &values).expect("buffer matches geometry")
}

/// Class of `subject` (1-based) in a generated corpus; subjects cycle Dry through Wet.
pub fn corpus_label(subject: usize) -> QualityLabel {
    QualityLabel::ALL[(subject.max(1) - 1) % QualityLabel::ALL.len()]
}

/// Writes `{subject}_{impression}.png` for every image of the corpus and a
/// `labels.csv` with the class of each file. Returns the labels in file order.
pub fn write_corpus(
    dir: &Path,
    subjects: usize,
    impressions: usize,
    size: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<(String, QualityLabel)>, CliError> {
    if subjects == 0 || impressions == 0 {
        return Err(CliError::Input("corpus needs at least one subject and one impression".into()));
    }
    create_dir(dir)?;
    let ids: Vec<(usize, usize)> = (1..=subjects)
        .flat_map(|s| (1..=impressions).map(move |i| (s, i)))
        .collect();
    let labels = thread_pool(jobs)?.install(|| {
        ids.par_iter()
            .map(|&(s, i)| {
                let kind = corpus_label(s);
                let finger_seed = seed.wrapping_mul(0x0100_0000_01B3).wrapping_add(s as u64);
                let name = format!("{s}_{i}.png");
                let img = synth_impression(kind, finger_seed, i, size);
                fpqe_core::imgcore::io::write_gray(&dir.join(&name), &img)?;
                Ok((name, kind))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    table::write_labels(&dir.join("labels.csv"), &labels)?;
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fpqe_core::features;

    fn features_of(kind: QualityLabel, seed: u64) -> features::QualityFeatures {
        features::extract(&synth_fingerprint(kind, seed, 256)).unwrap()
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_fingerprint(QualityLabel::Wet, 3, 128);
        assert_eq!(a, synth_fingerprint(QualityLabel::Wet, 3, 128));
        assert_ne!(a, synth_fingerprint(QualityLabel::Wet, 4, 128));
        assert_eq!(synth_fingerprint(QualityLabel::Good, 1, 10).width(), MIN_SIZE);
    }

    #[test]
    fn impressions_share_the_pattern() {
        use fpqe_core::eval::correlation_score;
        let a = synth_impression(QualityLabel::Good, 8, 1, 128);
        let b = synth_impression(QualityLabel::Good, 8, 2, 128);
        let other = synth_impression(QualityLabel::Good, 9, 1, 128);
        assert_ne!(a, b);
        let same = correlation_score(&a, &b, MAX_SHIFT as usize);
        assert!(same > 0.8, "{same}");
        assert!(correlation_score(&a, &other, MAX_SHIFT as usize) < same);
    }

    #[test]
    fn class_moisture_ranges() {
        for seed in 0..4 {
            let good = features_of(QualityLabel::Good, seed);
            let dry = features_of(QualityLabel::Dry, seed);
            let wet = features_of(QualityLabel::Wet, seed);
            assert!((-10.0..=10.0).contains(&good.moisture), "good {}", good.moisture);
            assert!(dry.moisture < -15.0, "dry {}", dry.moisture);
            assert!(dry.mean > good.mean, "dry mean {} vs {}", dry.mean, good.mean);
            assert!(wet.moisture > 15.0, "wet {}", wet.moisture);
        }
    }
}

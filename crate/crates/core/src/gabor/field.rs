use serde::Serialize;

use super::GaborError;
use crate::imgcore::filters::{gaussian_kernel, reflect};
use crate::imgcore::{gradient_moments, ForegroundMask, GrayImage, BLOCK_SIZE};

/// Extra pixels on each side of a block used for its gradient tensor.
const TENSOR_MARGIN: usize = 8;
/// Field smoothing scale, in blocks.
const FIELD_SIGMA: f64 = 1.0;
/// Length of the x-signature along the ridge normal.
const SIGNATURE_LEN: usize = 48;
/// Width of the x-signature along the ridge.
const SIGNATURE_WIDTH: usize = BLOCK_SIZE;
pub const MIN_FREQ: f64 = 1.0 / 25.0;
pub const MAX_FREQ: f64 = 1.0 / 3.0;

/// Per-block ridge-normal angle in `(-pi/2, pi/2]` and coherence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrientationField {
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub angle: Vec<f64>,
    pub coherence: Vec<f64>,
}

impl OrientationField {
    pub fn angle_at(&self, bx: usize, by: usize) -> f64 {
        self.angle[by * self.blocks_x + bx]
    }

    pub fn coherence_at(&self, bx: usize, by: usize) -> f64 {
        self.coherence[by * self.blocks_x + bx]
    }
}

/// Per-block ridge frequency in cycles per pixel. `valid` marks blocks measured
/// directly; the rest were filled from neighbors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyField {
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub freq: Vec<f64>,
    pub valid: Vec<bool>,
}

impl FrequencyField {
    pub fn freq_at(&self, bx: usize, by: usize) -> f64 {
        self.freq[by * self.blocks_x + bx]
    }
}

fn block_tensor(img: &GrayImage, bx: usize, by: usize) -> crate::imgcore::GradientMoments {
    let x0 = (bx * BLOCK_SIZE).saturating_sub(TENSOR_MARGIN);
    let y0 = (by * BLOCK_SIZE).saturating_sub(TENSOR_MARGIN);
    let x1 = ((bx + 1) * BLOCK_SIZE + TENSOR_MARGIN).min(img.width());
    let y1 = ((by + 1) * BLOCK_SIZE + TENSOR_MARGIN).min(img.height());
    gradient_moments(img, x0, y0, x1 - x0, y1 - y0)
}

/// Least-squares ridge-normal orientation per foreground block.
///
/// The doubled-angle unit vectors are smoothed with a Gaussian over foreground
/// blocks (sigma one block). Coherence is taken from the unsmoothed tensor.
/// Background blocks carry angle 0 and coherence 0.
pub fn orientation_field(img: &GrayImage, mask: &ForegroundMask) -> Result<OrientationField, GaborError> {
    mask.check_geometry(img.width(), img.height())?;
    let (bw, bh) = (mask.blocks_x(), mask.blocks_y());
    let mut raw_angle = vec![0.0; bw * bh];
    let mut coherence = vec![0.0; bw * bh];
    for (bx, by) in mask.foreground_blocks() {
        let m = block_tensor(img, bx, by);
        raw_angle[by * bw + bx] = m.angle();
        coherence[by * bw + bx] = m.coherence();
    }
    Ok(OrientationField {
        blocks_x: bw,
        blocks_y: bh,
        angle: smooth_angles(&raw_angle, mask),
        coherence,
    })
}

/// Gaussian smoothing of `(cos 2t, sin 2t)` over foreground blocks.
pub(crate) fn smooth_angles(angle: &[f64], mask: &ForegroundMask) -> Vec<f64> {
    let (bw, bh) = (mask.blocks_x(), mask.blocks_y());
    let kernel = gaussian_kernel(FIELD_SIGMA);
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; bw * bh];
    for (bx, by) in mask.foreground_blocks() {
        let (mut sx, mut sy) = (0.0, 0.0);
        for (j, ky) in kernel.iter().enumerate() {
            let ny = by as isize + j as isize - r;
            if ny < 0 || ny >= bh as isize {
                continue;
            }
            for (i, kx) in kernel.iter().enumerate() {
                let nx = bx as isize + i as isize - r;
                if nx < 0 || nx >= bw as isize || !mask.is_foreground(nx as usize, ny as usize) {
                    continue;
                }
                let t = angle[ny as usize * bw + nx as usize];
                sx += kx * ky * (2.0 * t).cos();
                sy += kx * ky * (2.0 * t).sin();
            }
        }
        let t = 0.5 * sy.atan2(sx);
        out[by * bw + bx] = crate::imgcore::normalize_half_turn(t);
    }
    out
}

fn bilinear_clamped(img: &GrayImage, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (img.width() - 1) as f64);
    let y = y.clamp(0.0, (img.height() - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(img.width() - 1), (y0 + 1).min(img.height() - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let p = |x, y| f64::from(img.get(x, y));
    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
    let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Gray profile along the ridge normal through the block center, averaged across
/// the ridge direction.
pub(crate) fn x_signature(img: &GrayImage, bx: usize, by: usize, theta: f64) -> Vec<f64> {
    let cx = (bx * BLOCK_SIZE) as f64 + BLOCK_SIZE as f64 / 2.0 - 0.5;
    let cy = (by * BLOCK_SIZE) as f64 + BLOCK_SIZE as f64 / 2.0 - 0.5;
    let (s, c) = theta.sin_cos();
    (0..SIGNATURE_LEN)
        .map(|k| {
            let u = k as f64 - SIGNATURE_LEN as f64 / 2.0 + 0.5;
            let total: f64 = (0..SIGNATURE_WIDTH)
                .map(|l| {
                    let v = l as f64 - SIGNATURE_WIDTH as f64 / 2.0 + 0.5;
                    bilinear_clamped(img, cx + u * c - v * s, cy + u * s + v * c)
                })
                .sum();
            total / SIGNATURE_WIDTH as f64
        })
        .collect()
}

/// Mean spacing between strict local maxima, refined by parabolic interpolation.
/// Suppresses sub-period bumps on flat valley plateaus before peak picking.
const SIGNATURE_SIGMA: f64 = 1.5;

fn smooth_signature(sig: &[f64]) -> Vec<f64> {
    let kernel = gaussian_kernel(SIGNATURE_SIGMA);
    let r = (kernel.len() / 2) as isize;
    (0..sig.len() as isize)
        .map(|i| {
            kernel
                .iter()
                .zip(-r..=r)
                .map(|(k, d)| k * sig[reflect(i + d, sig.len())])
                .sum()
        })
        .collect()
}

pub(crate) fn peak_spacing(sig: &[f64]) -> Option<f64> {
    let mut peaks = Vec::new();
    for i in 1..sig.len() - 1 {
        if sig[i] > sig[i - 1] && sig[i] >= sig[i + 1] {
            let denom = sig[i - 1] - 2.0 * sig[i] + sig[i + 1];
            let offset = if denom < 0.0 {
                0.5 * (sig[i - 1] - sig[i + 1]) / denom
            } else {
                0.0
            };
            peaks.push(i as f64 + offset);
        }
    }
    if peaks.len() < 2 {
        return None;
    }
    Some((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}

/// Ridge frequency per foreground block from the x-signature peak spacing.
///
/// Frequencies outside `[1/25, 1/3]` are invalid; invalid and background blocks are
/// filled with the mean of already-known 8-neighbors, growing outward from valid blocks.
pub fn ridge_frequency(
    img: &GrayImage,
    of: &OrientationField,
    mask: &ForegroundMask,
) -> Result<FrequencyField, GaborError> {
    mask.check_geometry(img.width(), img.height())?;
    let (bw, bh) = (mask.blocks_x(), mask.blocks_y());
    let mut freq = vec![0.0; bw * bh];
    let mut valid = vec![false; bw * bh];
    for (bx, by) in mask.foreground_blocks() {
        let sig = smooth_signature(&x_signature(img, bx, by, of.angle_at(bx, by)));
        if let Some(spacing) = peak_spacing(&sig) {
            let f = 1.0 / spacing;
            if (MIN_FREQ..=MAX_FREQ).contains(&f) {
                freq[by * bw + bx] = f;
                valid[by * bw + bx] = true;
            }
        }
    }
    if !valid.iter().any(|&v| v) {
        return Err(GaborError::NoValidBlocks);
    }
    let mut known = valid.clone();
    while known.iter().any(|&k| !k) {
        let snapshot = known.clone();
        let values = freq.clone();
        for by in 0..bh {
            for bx in 0..bw {
                if snapshot[by * bw + bx] {
                    continue;
                }
                let (mut sum, mut n) = (0.0, 0usize);
                for ny in by.saturating_sub(1)..(by + 2).min(bh) {
                    for nx in bx.saturating_sub(1)..(bx + 2).min(bw) {
                        if snapshot[ny * bw + nx] {
                            sum += values[ny * bw + nx];
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    freq[by * bw + bx] = sum / n as f64;
                    known[by * bw + bx] = true;
                }
            }
        }
    }
    Ok(FrequencyField {
        blocks_x: bw,
        blocks_y: bh,
        freq,
        valid,
    })
}

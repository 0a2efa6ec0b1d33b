use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{check_inputs, ridge, FeatureError};
use crate::imgcore::filters::reflect;
use crate::imgcore::{BinaryImage, ForegroundMask, GrayImage, BLOCK_SIZE};

/// Ridge-frequency band in cycles per pixel.
const RPS_BAND: (f64, f64) = (0.04, 0.125);
const GABOR_ORIENTATIONS: usize = 8;
const GABOR_FREQ: f64 = 1.0 / 9.0;
const GABOR_SIGMA: f64 = 4.0;
const GABOR_RADIUS: isize = 8;
/// Side of the analysis window centered on each block.
const GABOR_WINDOW: usize = 32;
const GABOR_STRIDE: usize = 2;
/// Dominant-orientation share of the total energy above which a block counts as good.
const SHEN_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsenFeatures {
    pub rps: f64,
    pub rvu: f64,
    pub gabor_q: f64,
    pub gabor_shen: f64,
}

pub fn olsen_features(
    img: &GrayImage,
    binary: &BinaryImage,
    mask: &ForegroundMask,
) -> Result<OlsenFeatures, FeatureError> {
    let rps = radial_power_spectrum(img, mask)?;
    let rvu = ridge::rvu(img, binary, mask)?;
    let (gabor_q, gabor_shen) = gabor_features(img, mask)?;
    Ok(OlsenFeatures {
        rps,
        rvu,
        gabor_q,
        gabor_shen,
    })
}

fn fft_rows(data: &mut [Complex<f64>], w: usize, planner: &mut FftPlanner<f64>) {
    let fft = planner.plan_fft_forward(w);
    for row in data.chunks_exact_mut(w) {
        fft.process(row);
    }
}

fn transpose(data: &[Complex<f64>], w: usize, h: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::default(); w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = data[y * w + x];
        }
    }
    out
}

/// Signed frequency of FFT bin `k` out of `n`, in cycles per sample.
fn bin_freq(k: usize, n: usize) -> f64 {
    let k = if k > n / 2 { k as f64 - n as f64 } else { k as f64 };
    k / n as f64
}

fn hann(i: usize, n: usize) -> f64 {
    if n < 2 {
        return 1.0;
    }
    0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()
}

/// Share of non-DC spectral energy inside the ridge-frequency annulus.
///
/// Foreground pixels are centered on the foreground mean, background pixels are
/// zeroed, and a separable Hann window is applied before the 2D FFT.
pub fn radial_power_spectrum(img: &GrayImage, mask: &ForegroundMask) -> Result<f64, FeatureError> {
    check_inputs(img.width(), img.height(), mask)?;
    let (w, h) = (img.width(), img.height());
    let (mut sum, mut n) = (0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            if mask.covers_pixel(x, y) {
                sum += f64::from(img.get(x, y));
                n += 1;
            }
        }
    }
    let mean = sum / n as f64;
    let mut data: Vec<Complex<f64>> = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let v = if mask.covers_pixel(x, y) {
                f64::from(img.get(x, y)) - mean
            } else {
                0.0
            };
            Complex::new(v * hann(x, w) * hann(y, h), 0.0)
        })
        .collect();

    let mut planner = FftPlanner::new();
    fft_rows(&mut data, w, &mut planner);
    let mut cols = transpose(&data, w, h);
    fft_rows(&mut cols, h, &mut planner);

    let (mut band, mut total) = (0.0, 0.0);
    for x in 0..w {
        let fx = bin_freq(x, w);
        for y in 0..h {
            if x == 0 && y == 0 {
                continue;
            }
            let e = cols[x * h + y].norm_sqr();
            let r = fx.hypot(bin_freq(y, h));
            total += e;
            if (RPS_BAND.0..=RPS_BAND.1).contains(&r) {
                band += e;
            }
        }
    }
    Ok(if total > 0.0 { band / total } else { 0.0 })
}

/// Even-symmetric zero-mean Gabor kernel with modulation along the normal angle `theta`.
fn gabor_kernel(theta: f64) -> Vec<f64> {
    let side = (2 * GABOR_RADIUS + 1) as usize;
    let (s, c) = theta.sin_cos();
    let mut k = Vec::with_capacity(side * side);
    for dy in -GABOR_RADIUS..=GABOR_RADIUS {
        for dx in -GABOR_RADIUS..=GABOR_RADIUS {
            let (x, y) = (dx as f64, dy as f64);
            let u = x * c + y * s;
            let env = (-(x * x + y * y) / (2.0 * GABOR_SIGMA * GABOR_SIGMA)).exp();
            k.push(env * (2.0 * PI * GABOR_FREQ * u).cos());
        }
    }
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    k.iter_mut().for_each(|v| *v -= mean);
    k
}

/// Squared filter responses on the stride grid, one plane per orientation.
fn response_energy(img: &GrayImage) -> (Vec<Vec<f64>>, usize, usize) {
    let (w, h) = (img.width(), img.height());
    let (gw, gh) = (w.div_ceil(GABOR_STRIDE), h.div_ceil(GABOR_STRIDE));
    let side = (2 * GABOR_RADIUS + 1) as usize;
    let planes = (0..GABOR_ORIENTATIONS)
        .map(|k| {
            let kernel = gabor_kernel(k as f64 * PI / GABOR_ORIENTATIONS as f64);
            let mut plane = Vec::with_capacity(gw * gh);
            for gy in 0..gh {
                let y = (gy * GABOR_STRIDE) as isize;
                for gx in 0..gw {
                    let x = (gx * GABOR_STRIDE) as isize;
                    let mut acc = 0.0;
                    for (j, dy) in (-GABOR_RADIUS..=GABOR_RADIUS).enumerate() {
                        let sy = reflect(y + dy, h);
                        let row = &kernel[j * side..(j + 1) * side];
                        for (i, dx) in (-GABOR_RADIUS..=GABOR_RADIUS).enumerate() {
                            acc += row[i] * f64::from(img.get(reflect(x + dx, w), sy));
                        }
                    }
                    plane.push(acc * acc);
                }
            }
            plane
        })
        .collect();
    (planes, gw, gh)
}

/// Returns `(gabor_q, gabor_shen)`.
///
/// A bank of 8 even Gabor filters (period 9 px) is applied on a stride-2 grid.
/// For each foreground block the response energy per orientation is summed over a
/// 32x32 window centered on the block. `gabor_q` is the mean over blocks of the
/// coefficient of variation of those energies; `gabor_shen` is the fraction of
/// blocks whose strongest orientation holds more than a quarter of the energy.
pub fn gabor_features(img: &GrayImage, mask: &ForegroundMask) -> Result<(f64, f64), FeatureError> {
    check_inputs(img.width(), img.height(), mask)?;
    let (planes, gw, gh) = response_energy(img);
    let half = (GABOR_WINDOW / 2) as isize;
    let (mut q_sum, mut shen_count, mut n) = (0.0, 0usize, 0usize);
    for (bx, by) in mask.foreground_blocks() {
        let cx = (bx * BLOCK_SIZE + BLOCK_SIZE / 2) as isize;
        let cy = (by * BLOCK_SIZE + BLOCK_SIZE / 2) as isize;
        let grid_range = |c: isize, len: usize| {
            let lo = (c - half).max(0) as usize;
            let hi = ((c + half) as usize).min(len * GABOR_STRIDE);
            lo.div_ceil(GABOR_STRIDE)..hi.div_ceil(GABOR_STRIDE).min(len)
        };
        let (xr, yr) = (grid_range(cx, gw), grid_range(cy, gh));
        let energies: Vec<f64> = planes
            .iter()
            .map(|plane| {
                yr.clone()
                    .flat_map(|gy| xr.clone().map(move |gx| plane[gy * gw + gx]))
                    .sum()
            })
            .collect();
        let total: f64 = energies.iter().sum();
        n += 1;
        if total <= 0.0 {
            continue;
        }
        let k = energies.len() as f64;
        let mean = total / k;
        let std = (energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / k).sqrt();
        q_sum += std / mean;
        let peak = energies.iter().cloned().fold(0.0, f64::max);
        if peak / total > SHEN_THRESHOLD {
            shen_count += 1;
        }
    }
    Ok((q_sum / n as f64, shen_count as f64 / n as f64))
}

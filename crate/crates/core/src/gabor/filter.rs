use std::f64::consts::PI;

use super::field::{FrequencyField, OrientationField};
use super::GaborError;
use crate::imgcore::filters::reflect;
use crate::imgcore::{ForegroundMask, GrayImage, BLOCK_SIZE};

pub const GABOR_SIGMA: f64 = 4.0;
pub const KERNEL_RADIUS: usize = 12;
/// Percentiles of the foreground response mapped to black and white.
const STRETCH_PERCENTILES: (f64, f64) = (0.01, 0.99);

/// Affine gray-level normalization to a target mean and variance.
pub fn normalize(img: &GrayImage, target_mean: f64, target_var: f64) -> Result<GrayImage, GaborError> {
    let v = img.to_f64();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(GaborError::ConstantImage);
    }
    let gain = (target_var / var).sqrt();
    let out: Vec<f64> = v.iter().map(|x| target_mean + gain * (x - mean)).collect();
    Ok(GrayImage::from_f64(img.width(), img.height(), &out)?)
}

/// Even-symmetric Gabor kernel modulated along the ridge normal `theta`, zero mean.
pub fn gabor_kernel(theta: f64, freq: f64, sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let (s, c) = theta.sin_cos();
    let mut k = Vec::with_capacity((2 * radius + 1).pow(2));
    for dy in -r..=r {
        for dx in -r..=r {
            let (x, y) = (dx as f64, dy as f64);
            let u = x * c + y * s;
            let env = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
            k.push(env * (2.0 * PI * freq * u).cos());
        }
    }
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    k.iter_mut().for_each(|v| *v -= mean);
    k
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Filters every foreground block with a Gabor kernel tuned to its orientation and
/// frequency. The response is stretched so the 1st/99th foreground percentiles map
/// to 0/255; background pixels are white.
pub fn gabor_enhance(
    img: &GrayImage,
    of: &OrientationField,
    ff: &FrequencyField,
    mask: &ForegroundMask,
) -> Result<GrayImage, GaborError> {
    mask.check_geometry(img.width(), img.height())?;
    if of.blocks_x != mask.blocks_x() || ff.blocks_x != mask.blocks_x()
        || of.blocks_y != mask.blocks_y() || ff.blocks_y != mask.blocks_y()
    {
        return Err(GaborError::Image(crate::imgcore::ImgError::GeometryMismatch));
    }
    let (w, h) = (img.width(), img.height());
    let src = img.to_f64();
    let side = 2 * KERNEL_RADIUS + 1;
    let r = KERNEL_RADIUS as isize;
    let mut response = vec![f64::NAN; w * h];
    for (bx, by) in mask.foreground_blocks() {
        let kernel = gabor_kernel(of.angle_at(bx, by), ff.freq_at(bx, by), GABOR_SIGMA, KERNEL_RADIUS);
        for y in by * BLOCK_SIZE..(by + 1) * BLOCK_SIZE {
            for x in bx * BLOCK_SIZE..(bx + 1) * BLOCK_SIZE {
                let mut acc = 0.0;
                for (j, dy) in (-r..=r).enumerate() {
                    let row = reflect(y as isize + dy, h) * w;
                    let krow = &kernel[j * side..(j + 1) * side];
                    for (i, dx) in (-r..=r).enumerate() {
                        acc += krow[i] * src[row + reflect(x as isize + dx, w)];
                    }
                }
                response[y * w + x] = acc;
            }
        }
    }
    let mut fg: Vec<f64> = response.iter().copied().filter(|v| !v.is_nan()).collect();
    if fg.is_empty() {
        return Ok(GrayImage::filled(w, h, 255));
    }
    fg.sort_by(f64::total_cmp);
    let lo = quantile(&fg, STRETCH_PERCENTILES.0);
    let hi = quantile(&fg, STRETCH_PERCENTILES.1);
    let span = (hi - lo).max(f64::EPSILON);
    let out: Vec<f64> = response
        .iter()
        .map(|&v| if v.is_nan() { 255.0 } else { 255.0 * (v - lo) / span })
        .collect();
    Ok(GrayImage::from_f64(w, h, &out)?)
}

use super::{check_inputs, FeatureError};
use crate::imgcore::{BinaryImage, ForegroundMask, GrayImage, BLOCK_SIZE};

/// Valley gray mean minus ridge gray mean inside one block; 0 when either class is empty.
fn block_separation(img: &GrayImage, binary: &BinaryImage, bx: usize, by: usize) -> f64 {
    let (mut ridge_sum, mut ridge_n, mut valley_sum, mut valley_n) = (0.0, 0usize, 0.0, 0usize);
    for y in by * BLOCK_SIZE..(by + 1) * BLOCK_SIZE {
        for x in bx * BLOCK_SIZE..(bx + 1) * BLOCK_SIZE {
            let v = f64::from(img.get(x, y));
            if binary.get(x, y) {
                ridge_sum += v;
                ridge_n += 1;
            } else {
                valley_sum += v;
                valley_n += 1;
            }
        }
    }
    if ridge_n == 0 || valley_n == 0 {
        return 0.0;
    }
    valley_sum / valley_n as f64 - ridge_sum / ridge_n as f64
}

/// Returns `(uniformity, contrast)`.
///
/// With `s_b` the ridge/valley gray separation of block `b`, uniformity is the
/// fraction of foreground blocks with `|s_b - mean(s)| <= std(s)` and contrast
/// is `mean(s) / 255`.
pub fn uniformity_contrast(
    img: &GrayImage,
    binary: &BinaryImage,
    mask: &ForegroundMask,
) -> Result<(f64, f64), FeatureError> {
    check_inputs(img.width(), img.height(), mask)?;
    check_inputs(binary.width(), binary.height(), mask)?;
    let seps: Vec<f64> = mask
        .foreground_blocks()
        .map(|(bx, by)| block_separation(img, binary, bx, by))
        .collect();
    let n = seps.len() as f64;
    let mean = seps.iter().sum::<f64>() / n;
    let std = (seps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    // Slack absorbs rounding when every block is identical.
    let within = seps.iter().filter(|s| (*s - mean).abs() <= std + 1e-9).count();
    Ok((within as f64 / n, mean / 255.0))
}

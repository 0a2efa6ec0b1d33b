use super::{check_inputs, foreground_mean, FeatureError};
use crate::imgcore::{
    block_orientation, rotate_image, thin, BinaryImage, ForegroundMask, GrayImage, BLOCK_SIZE,
};

/// Binary block at `(bx, by)` rotated so its ridges run vertically.
///
/// The orientation comes from the gray block; isotropic blocks are left unrotated.
pub fn rotated_binary_block(img: &GrayImage, binary: &BinaryImage, bx: usize, by: usize) -> BinaryImage {
    let block = binary.block(bx, by);
    let theta = match block_orientation(&img.block(bx, by)) {
        Ok(t) => t,
        Err(_) => return block,
    };
    let rotated = rotate_image(&block.to_gray(), theta);
    BinaryImage::from_fn(BLOCK_SIZE, BLOCK_SIZE, |x, y| rotated.get(x, y) < 128)
}

/// Half the largest per-row count of ridge/valley transitions.
pub(crate) fn max_row_flips_half(block: &BinaryImage) -> f64 {
    let mut max_flips = 0usize;
    for y in 0..block.height() {
        let flips = (1..block.width())
            .filter(|&x| block.get(x, y) != block.get(x - 1, y))
            .count();
        max_flips = max_flips.max(flips);
    }
    max_flips as f64 / 2.0
}

/// Ridge line count: rotate each foreground block to vertical ridges, thin,
/// and take half the maximum number of bit flips over the rows.
pub fn rlc(img: &GrayImage, binary: &BinaryImage, mask: &ForegroundMask) -> Result<f64, FeatureError> {
    check_inputs(img.width(), img.height(), mask)?;
    check_inputs(binary.width(), binary.height(), mask)?;
    foreground_mean(mask, |bx, by| {
        let skeleton = thin(&rotated_binary_block(img, binary, bx, by));
        max_row_flips_half(&skeleton)
    })
}

/// Mean ridge and valley run lengths over the rows of a block, counting only
/// runs bounded on both sides (runs touching the block edge are partial).
pub(crate) fn run_thickness(block: &BinaryImage) -> Option<(f64, f64)> {
    let (mut ridge_px, mut ridge_runs, mut valley_px, mut valley_runs) = (0usize, 0usize, 0usize, 0usize);
    for y in 0..block.height() {
        let mut start = 0;
        for x in 1..=block.width() {
            if x == block.width() || block.get(x, y) != block.get(start, y) {
                let interior = start > 0 && x < block.width();
                if interior {
                    if block.get(start, y) {
                        ridge_px += x - start;
                        ridge_runs += 1;
                    } else {
                        valley_px += x - start;
                        valley_runs += 1;
                    }
                }
                start = x;
            }
        }
    }
    if ridge_runs == 0 || valley_runs == 0 {
        return None;
    }
    Some((
        ridge_px as f64 / ridge_runs as f64,
        valley_px as f64 / valley_runs as f64,
    ))
}

/// Ridge/valley thickness uniformity: mean over measurable foreground blocks of
/// `|ridge_thickness / valley_thickness - 1|` from rows of the rotated block.
/// Blocks without complete ridge and valley runs are skipped; 0 if none qualify.
pub fn rvu(img: &GrayImage, binary: &BinaryImage, mask: &ForegroundMask) -> Result<f64, FeatureError> {
    check_inputs(img.width(), img.height(), mask)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (bx, by) in mask.foreground_blocks() {
        if let Some((ridge, valley)) = run_thickness(&rotated_binary_block(img, binary, bx, by)) {
            sum += (ridge / valley - 1.0).abs();
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::to_u8;
    use std::f64::consts::PI;

    fn vertical_lines(cols: &[usize]) -> (GrayImage, BinaryImage) {
        let bin = BinaryImage::from_fn(16, 16, |x, _| cols.contains(&x));
        (bin.to_gray(), bin)
    }

    #[test]
    fn three_thin_lines_count_three() {
        let (img, bin) = vertical_lines(&[3, 8, 12]);
        let m = ForegroundMask::full(16, 16);
        assert_eq!(rlc(&img, &bin, &m).unwrap(), 3.0);
    }

    #[test]
    fn empty_block_counts_zero() {
        let img = GrayImage::filled(16, 16, 255);
        let bin = BinaryImage::blank(16, 16);
        assert_eq!(rlc(&img, &bin, &ForegroundMask::full(16, 16)).unwrap(), 0.0);
    }

    /// Brute-force ridge count along the ridge normal through the block center.
    fn crossings_through_center(bin: &BinaryImage, phi: f64) -> usize {
        let (s, c) = phi.sin_cos();
        let mut prev = None;
        let mut runs = 0;
        for k in -60..=60 {
            let t = k as f64 * 0.125;
            let (x, y) = (7.5 + t * c, 7.5 + t * s);
            if x < 0.0 || y < 0.0 || x > 15.0 || y > 15.0 {
                continue;
            }
            let v = bin.get(x.round() as usize, y.round() as usize);
            if v && prev == Some(false) {
                runs += 1;
            }
            prev = Some(v);
        }
        runs
    }

    #[test]
    fn oblique_grating_counts_ridges() {
        let phi = PI / 6.0;
        let (s, c) = phi.sin_cos();
        let img = GrayImage::from_fn(16, 16, |x, y| {
            let t = (x as f64 - 7.5) * c + (y as f64 - 7.5) * s;
            to_u8(128.0 + 110.0 * (2.0 * PI * t / 6.0).cos())
        });
        let bin = BinaryImage::from_fn(16, 16, |x, y| img.get(x, y) < 128);
        let expected = crossings_through_center(&bin, phi) as f64;
        let got = rlc(&img, &bin, &ForegroundMask::full(16, 16)).unwrap();
        assert!((got - expected).abs() <= 1.0, "rlc {got}, brute force {expected}");
    }

    #[test]
    fn balanced_thickness_has_zero_rvu() {
        let bin = BinaryImage::from_fn(32, 32, |x, _| (x / 4) % 2 == 0);
        let img = bin.to_gray();
        let v = rvu(&img, &bin, &ForegroundMask::full(32, 32)).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn unbalanced_thickness_has_positive_rvu() {
        let bin = BinaryImage::from_fn(32, 32, |x, _| x % 8 < 2);
        let img = bin.to_gray();
        let v = rvu(&img, &bin, &ForegroundMask::full(32, 32)).unwrap();
        assert!((v - (1.0 - 2.0 / 6.0)).abs() < 1e-12, "{v}");
    }
}

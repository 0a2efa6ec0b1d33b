use super::{check_inputs, foreground_mean, FeatureError, LAMBDA};
use crate::imgcore::{BinaryImage, ForegroundMask, GrayImage, BLOCK_PIXELS, BLOCK_SIZE};

/// Per-block ridge/valley ratio assigned to a block with no valley pixels.
pub const RVAU_CAP: f64 = 256.0;

fn ridge_count(binary: &BinaryImage, bx: usize, by: usize) -> usize {
    let mut n = 0;
    for y in by * BLOCK_SIZE..(by + 1) * BLOCK_SIZE {
        for x in bx * BLOCK_SIZE..(bx + 1) * BLOCK_SIZE {
            n += usize::from(binary.get(x, y));
        }
    }
    n
}

/// Global moisture: mean over foreground blocks of `ridge% - lambda`.
pub fn moisture(binary: &BinaryImage, mask: &ForegroundMask) -> Result<f64, FeatureError> {
    moisture_with_lambda(binary, mask, LAMBDA)
}

pub fn moisture_with_lambda(
    binary: &BinaryImage,
    mask: &ForegroundMask,
    lambda: f64,
) -> Result<f64, FeatureError> {
    check_inputs(binary.width(), binary.height(), mask)?;
    foreground_mean(mask, |bx, by| {
        ridge_count(binary, bx, by) as f64 / BLOCK_PIXELS as f64 * 100.0 - lambda
    })
}

/// Mean of the per-block gray means over foreground blocks.
pub fn mean_gray(img: &GrayImage, mask: &ForegroundMask) -> Result<f64, FeatureError> {
    check_inputs(img.width(), img.height(), mask)?;
    foreground_mean(mask, |bx, by| img.block(bx, by).mean())
}

/// Mean of the per-block population variances over foreground blocks.
pub fn variance_gray(img: &GrayImage, mask: &ForegroundMask) -> Result<f64, FeatureError> {
    check_inputs(img.width(), img.height(), mask)?;
    foreground_mean(mask, |bx, by| img.block(bx, by).variance())
}

pub(crate) fn rvau_local(ridge: usize) -> f64 {
    if ridge >= BLOCK_PIXELS {
        RVAU_CAP
    } else {
        ridge as f64 / (BLOCK_PIXELS - ridge) as f64
    }
}

/// Ridge-to-valley area ratio averaged over foreground blocks.
pub fn rvau(binary: &BinaryImage, mask: &ForegroundMask) -> Result<f64, FeatureError> {
    check_inputs(binary.width(), binary.height(), mask)?;
    foreground_mean(mask, |bx, by| rvau_local(ridge_count(binary, bx, by)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn block_with_ridges(n: usize) -> BinaryImage {
        BinaryImage::from_fn(16, 16, |x, y| y * 16 + x < n)
    }

    fn full(b: &BinaryImage) -> ForegroundMask {
        ForegroundMask::full(b.width(), b.height())
    }

    #[test]
    fn moisture_bounds_and_midpoint() {
        let all = block_with_ridges(256);
        assert_eq!(moisture(&all, &full(&all)).unwrap(), 48.75);
        let none = block_with_ridges(0);
        assert_eq!(moisture(&none, &full(&none)).unwrap(), -51.25);
        let half = block_with_ridges(128);
        assert_eq!(moisture(&half, &full(&half)).unwrap(), -1.25);
    }

    #[test]
    fn rvau_values() {
        let half = block_with_ridges(128);
        assert_eq!(rvau(&half, &full(&half)).unwrap(), 1.0);
        let quarter = block_with_ridges(64);
        assert!((rvau(&quarter, &full(&quarter)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let all = block_with_ridges(256);
        assert_eq!(rvau(&all, &full(&all)).unwrap(), RVAU_CAP);
    }

    #[test]
    fn rvau_strictly_increasing_up_to_cap() {
        let mut prev = -1.0;
        for n in 0..=256 {
            let v = rvau_local(n);
            assert!(v > prev, "not increasing at {n}");
            assert!(v.is_finite());
            prev = v;
        }
    }

    #[test]
    fn mean_and_variance_of_two_valued_block() {
        let img = GrayImage::from_fn(16, 16, |x, _| if x % 2 == 0 { 0 } else { 255 });
        let m = ForegroundMask::full(16, 16);
        assert_eq!(mean_gray(&img, &m).unwrap(), 127.5);
        assert!((variance_gray(&img, &m).unwrap() - 16256.25).abs() < 1e-9);
        let c = GrayImage::filled(32, 32, 128);
        let m = ForegroundMask::full(32, 32);
        assert_eq!(mean_gray(&c, &m).unwrap(), 128.0);
        assert_eq!(variance_gray(&c, &m).unwrap(), 0.0);
    }

    #[test]
    fn empty_mask_is_no_foreground() {
        let img = GrayImage::filled(16, 16, 1);
        let m = ForegroundMask::new(1, 1, vec![false]).unwrap();
        assert_eq!(mean_gray(&img, &m), Err(FeatureError::NoForeground));
    }

    proptest! {
        #[test]
        fn block_mean_average_equals_pixel_mean(
            data in proptest::collection::vec(any::<u8>(), 48 * 32),
            flags in proptest::collection::vec(any::<bool>(), 6),
        ) {
            prop_assume!(flags.iter().any(|&f| f));
            let img = GrayImage::new(48, 32, data).unwrap();
            let mask = ForegroundMask::new(3, 2, flags).unwrap();
            let (mut sum, mut n) = (0.0, 0usize);
            for y in 0..32 {
                for x in 0..48 {
                    if mask.covers_pixel(x, y) {
                        sum += f64::from(img.get(x, y));
                        n += 1;
                    }
                }
            }
            prop_assert!((mean_gray(&img, &mask).unwrap() - sum / n as f64).abs() < 1e-9);
        }

        #[test]
        fn variance_scales_quadratically(base in proptest::collection::vec(64u8..=150, 256)) {
            // Doubling every deviation (v -> 2v - 64 stays inside 8 bits) quadruples the variance.
            let img = GrayImage::new(16, 16, base.clone()).unwrap();
            let stretched = GrayImage::new(16, 16, base.iter().map(|&v| (2 * u16::from(v) - 64) as u8).collect()).unwrap();
            let m = ForegroundMask::full(16, 16);
            let v1 = variance_gray(&img, &m).unwrap();
            let v2 = variance_gray(&stretched, &m).unwrap();
            prop_assert!(v1 >= 0.0);
            prop_assert!((v2 - 4.0 * v1).abs() < 1e-6 * (1.0 + v1));
        }

        #[test]
        fn moisture_bounded_and_monotone(bits in proptest::collection::vec(any::<bool>(), 32 * 32), extra in 0usize..1024) {
            let b = BinaryImage::new(32, 32, bits).unwrap();
            let m = ForegroundMask::full(32, 32);
            let mi = moisture(&b, &m).unwrap();
            prop_assert!((-51.25..=48.75).contains(&mi));
            let mut more = b.clone();
            more.set(extra % 32, extra / 32, true);
            prop_assert!(moisture(&more, &m).unwrap() >= mi);
        }
    }
}

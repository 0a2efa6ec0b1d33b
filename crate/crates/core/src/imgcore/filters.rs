use super::{to_u8, GrayImage, ImgError};

pub const DEFAULT_SMOOTH_SIGMA: f64 = 1.0;

/// Normalized 1-D Gaussian kernel with radius `ceil(3 * sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Reflect-101 border index (`-1 -> 1`, `n -> n - 2`).
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// Separable Gaussian blur of a real-valued raster with reflected borders.
pub fn gaussian_blur_f64(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; values.len()];
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * row[reflect(x as isize + k as isize - radius, width)];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * tmp[reflect(y as isize + k as isize - radius, height) * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Gaussian smoothing, rounded back to 8 bits.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64) -> Result<GrayImage, ImgError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(ImgError::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let blurred = gaussian_blur_f64(&img.to_f64(), img.width(), img.height(), sigma);
    GrayImage::from_f64(img.width(), img.height(), &blurred)
}

/// Unsharp masking: `img + amount * (img - blur(img, sigma = radius))`, clamped to 8 bits.
pub fn unsharp_mask(img: &GrayImage, radius: f64, amount: f64) -> Result<GrayImage, ImgError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(ImgError::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    if !(amount >= 0.0) || !amount.is_finite() {
        return Err(ImgError::InvalidParameter(format!("amount must be non-negative, got {amount}")));
    }
    if amount == 0.0 {
        return Ok(img.clone());
    }
    let src = img.to_f64();
    let blurred = gaussian_blur_f64(&src, img.width(), img.height(), radius);
    let sharpened: Vec<f64> = src
        .iter()
        .zip(&blurred)
        .map(|(&v, &b)| v + amount * (v - b))
        .collect();
    GrayImage::new(img.width(), img.height(), sharpened.into_iter().map(to_u8).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_sums_to_one() {
        for sigma in [0.5, 1.0, 1.5, 3.0] {
            let k = gaussian_kernel(sigma);
            assert_eq!(k.len(), 2 * (3.0f64 * sigma).ceil() as usize + 1);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(6, 5), 2);
        assert_eq!(reflect(3, 5), 3);
        assert_eq!(reflect(-9, 5), 1);
    }

    #[test]
    fn constant_image_unchanged() {
        let img = GrayImage::filled(32, 20, 77);
        assert_eq!(gaussian_smooth(&img, 1.0).unwrap(), img);
        assert_eq!(unsharp_mask(&img, 2.0, 1.5).unwrap(), img);
    }

    #[test]
    fn impulse_response_preserves_mass() {
        let mut img = GrayImage::filled(33, 33, 0);
        img.set(16, 16, 255);
        let out = gaussian_smooth(&img, 1.0).unwrap();
        let total: u32 = out.data().iter().map(|&v| u32::from(v)).sum();
        assert!((total as i64 - 255).abs() <= 25, "total {total}");
        assert_eq!(out.get(16, 16), out.data().iter().copied().max().unwrap());
        assert_eq!(out.get(15, 16), out.get(17, 16));
        assert_eq!(out.get(16, 15), out.get(16, 17));
    }

    #[test]
    fn smoothing_reduces_noise_variance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let img = GrayImage::from_fn(64, 64, |_, _| rng.random());
        let var = |g: &GrayImage| {
            let v = g.to_f64();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        let out = gaussian_smooth(&img, 1.5).unwrap();
        assert!(var(&out) < var(&img));
    }

    #[test]
    fn unsharp_step_overshoots() {
        let img = GrayImage::from_fn(40, 16, |x, _| if x < 20 { 40 } else { 200 });
        let out = unsharp_mask(&img, 2.0, 1.0).unwrap();
        let max = out.data().iter().copied().max().unwrap();
        let min = out.data().iter().copied().min().unwrap();
        assert!(max > 200 && min < 40, "min {min} max {max}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        let img = GrayImage::filled(16, 16, 0);
        assert!(unsharp_mask(&img, 0.0, 1.0).is_err());
        assert!(unsharp_mask(&img, 1.0, -0.1).is_err());
        assert!(gaussian_smooth(&img, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn zero_amount_is_identity(data in proptest::collection::vec(any::<u8>(), 16 * 16), radius in 0.3f64..4.0) {
            let img = GrayImage::new(16, 16, data).unwrap();
            prop_assert_eq!(unsharp_mask(&img, radius, 0.0).unwrap(), img);
        }
    }
}

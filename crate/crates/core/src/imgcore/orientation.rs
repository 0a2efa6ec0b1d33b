use std::f64::consts::{FRAC_PI_2, PI};

use super::{to_u8, Block, GrayImage, ImgError, BLOCK_SIZE};

/// Second moments of the central-difference gradient over a block's interior pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientMoments {
    /// mean dx^2
    pub a: f64,
    /// mean dy^2
    pub b: f64,
    /// mean dx*dy
    pub c: f64,
}

impl GradientMoments {
    /// Dominant gradient direction, i.e. the ridge normal, in `(-pi/2, pi/2]`.
    pub fn angle(&self) -> f64 {
        normalize_half_turn(0.5 * (2.0 * self.c).atan2(self.a - self.b))
    }

    /// Eigenvalue contrast `(l1 - l2) / (l1 + l2)` in `[0, 1]`.
    pub fn coherence(&self) -> f64 {
        let trace = self.a + self.b;
        if trace <= 0.0 {
            return 0.0;
        }
        ((self.a - self.b).powi(2) + 4.0 * self.c * self.c).sqrt() / trace
    }

    pub fn is_isotropic(&self) -> bool {
        let scale = (self.a + self.b).max(f64::MIN_POSITIVE);
        ((self.a - self.b).abs() / scale) < 1e-12 && (self.c.abs() / scale) < 1e-12
    }
}

/// Gradient covariance of an arbitrary rectangular window, using central
/// differences at interior pixels only. The normalization is by the full
/// window area.
pub fn gradient_moments(img: &GrayImage, x0: usize, y0: usize, w: usize, h: usize) -> GradientMoments {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for y in y0 + 1..y0 + h - 1 {
        for x in x0 + 1..x0 + w - 1 {
            let dx = (f64::from(img.get(x + 1, y)) - f64::from(img.get(x - 1, y))) * 0.5;
            let dy = (f64::from(img.get(x, y + 1)) - f64::from(img.get(x, y - 1))) * 0.5;
            a += dx * dx;
            b += dy * dy;
            c += dx * dy;
        }
    }
    let n = (w * h) as f64;
    GradientMoments {
        a: a / n,
        b: b / n,
        c: c / n,
    }
}

/// Maps any angle onto the orientation interval `(-pi/2, pi/2]`.
pub(crate) fn normalize_half_turn(theta: f64) -> f64 {
    let mut t = theta % PI;
    if t <= -FRAC_PI_2 {
        t += PI;
    } else if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Orientation of a block from the principal axis of its gradient covariance.
///
/// The returned angle is the direction across the ridges (x to the right, y down):
/// 0 for vertical ridges, pi/2 for horizontal ridges.
pub fn block_orientation(block: &Block) -> Result<f64, ImgError> {
    let m = gradient_moments(&block.to_image(), 0, 0, BLOCK_SIZE, BLOCK_SIZE);
    if m.is_isotropic() {
        return Err(ImgError::IsotropicBlock);
    }
    Ok(m.angle())
}

/// Bilinear rotation about the image center. Content is turned so that every
/// orientation decreases by `theta`; samples falling outside the source are white.
pub fn rotate_image(img: &GrayImage, theta: f64) -> GrayImage {
    if theta == 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let (s, c) = theta.sin_cos();
    let sample = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
            255.0
        } else {
            f64::from(img.get(x as usize, y as usize))
        }
    };
    GrayImage::from_fn(w, h, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let sx = cx + c * dx - s * dy;
        let sy = cy + s * dx + c * dy;
        // Points more than half a pixel outside the raster are outside the support.
        if sx < -0.5 || sy < -0.5 || sx > w as f64 - 0.5 || sy > h as f64 - 0.5 {
            return 255;
        }
        let x0 = sx.floor();
        let y0 = sy.floor();
        let fx = sx - x0;
        let fy = sy - y0;
        let (x0, y0) = (x0 as isize, y0 as isize);
        let v = sample(x0, y0) * (1.0 - fx) * (1.0 - fy)
            + sample(x0 + 1, y0) * fx * (1.0 - fy)
            + sample(x0, y0 + 1) * (1.0 - fx) * fy
            + sample(x0 + 1, y0 + 1) * fx * fy;
        to_u8(v)
    })
}

/// [`rotate_image`] on a single block; rotating by the block's own
/// orientation brings its ridges to vertical.
pub fn rotate_block(block: &Block, theta: f64) -> Block {
    let rotated = rotate_image(&block.to_image(), theta);
    let mut out = Block::from_fn(|x, y| rotated.get(x, y));
    out.origin = block.origin;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sinusoidal grating whose intensity varies along direction `phi`.
    pub(crate) fn grating(phi: f64, period: f64) -> Block {
        let (s, c) = phi.sin_cos();
        Block::from_fn(|x, y| {
            let t = (x as f64 - 7.5) * c + (y as f64 - 7.5) * s;
            to_u8(128.0 + 100.0 * (2.0 * PI * t / period).cos())
        })
    }

    fn angle_diff(a: f64, b: f64) -> f64 {
        normalize_half_turn(a - b).abs()
    }

    #[test]
    fn horizontal_grating_is_half_pi() {
        let b = Block::from_fn(|_, y| to_u8(128.0 + 100.0 * (2.0 * PI * y as f64 / 8.0).sin()));
        assert!((block_orientation(&b).unwrap() - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn vertical_grating_is_zero() {
        let b = Block::from_fn(|x, _| to_u8(128.0 + 100.0 * (2.0 * PI * x as f64 / 8.0).sin()));
        assert!(block_orientation(&b).unwrap().abs() < 1e-9);
    }

    #[test]
    fn diagonal_grating_is_quarter_pi() {
        let theta = block_orientation(&grating(PI / 4.0, 8.0)).unwrap();
        assert!((theta - PI / 4.0).abs() < 0.05, "{theta}");
    }

    #[test]
    fn constant_block_is_isotropic() {
        let b = Block::from_fn(|_, _| 90);
        assert_eq!(block_orientation(&b), Err(ImgError::IsotropicBlock));
    }

    #[test]
    fn zero_rotation_is_identity() {
        let g = grating(0.3, 7.0);
        assert_eq!(rotate_block(&g, 0.0), g);
    }

    #[test]
    fn quarter_turn_transposes_stripes() {
        let horizontal = Block::from_fn(|_, y| if (y / 2) % 2 == 0 { 0 } else { 255 });
        let rotated = rotate_block(&horizontal, FRAC_PI_2);
        // Every row of the rotated block should be the source column pattern.
        for y in 0..BLOCK_SIZE {
            for x in 1..BLOCK_SIZE - 1 {
                assert_eq!(rotated.get(x, y), rotated.get(x, 0), "row variation at ({x},{y})");
            }
        }
        assert!(block_orientation(&rotated).unwrap().abs() < 0.05);
    }

    #[test]
    fn rotating_by_own_orientation_makes_ridges_vertical() {
        for phi in [0.2f64, 0.5, -0.7, 1.2, -1.3] {
            let g = grating(phi, 8.0);
            let theta = block_orientation(&g).unwrap();
            let r = rotate_block(&g, theta);
            // Only the central disc is free of the white corner fill.
            let img = r.to_image();
            let m = gradient_moments(&img, 3, 3, 10, 10);
            assert!(m.angle().abs() < 0.05, "phi {phi}: residual {}", m.angle());
        }
    }

    #[test]
    fn rotation_consistency_on_gratings() {
        for phi in [0.1f64, 0.6, -0.4] {
            for delta in [0.3f64, -0.5, 0.8] {
                let g = grating(phi, 8.0);
                let r = rotate_image(&g.to_image(), delta);
                let m = gradient_moments(&r, 3, 3, 10, 10);
                let expected = normalize_half_turn(phi - delta);
                assert!(angle_diff(m.angle(), expected) < 0.1, "phi {phi} delta {delta}");
            }
        }
    }
}

use super::filters::reflect;
use super::{GrayImage, ImgError};

pub const DEFAULT_CLIP_LIMIT: f64 = 2.0;

/// Number of tiles per axis used by [`TileSize::default_for`].
const DEFAULT_TILES_PER_AXIS: usize = 8;

/// CLAHE tile dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileSize {
    pub width: usize,
    pub height: usize,
}

impl TileSize {
    /// An 8x8 grid of tiles over the image.
    pub fn default_for(img: &GrayImage) -> Self {
        Self {
            width: img.width().div_ceil(DEFAULT_TILES_PER_AXIS).max(1),
            height: img.height().div_ceil(DEFAULT_TILES_PER_AXIS).max(1),
        }
    }
}

/// Contrast-limited adaptive histogram equalization.
///
/// Each tile gets a 256-bin histogram clipped at `clip_limit` times the uniform
/// bin height, with the excess spread evenly over all bins. Pixel values are
/// mapped through the four surrounding tile transfer functions with bilinear
/// weights. The image is padded by reflection up to whole tiles.
/// `clip_limit = f64::INFINITY` gives plain adaptive equalization.
pub fn clahe(img: &GrayImage, tile: TileSize, clip_limit: f64) -> Result<GrayImage, ImgError> {
    if tile.width == 0 || tile.height == 0 {
        return Err(ImgError::InvalidParameter("tile size must be nonzero".into()));
    }
    if !(clip_limit >= 1.0) {
        return Err(ImgError::InvalidParameter(format!(
            "clip limit must be at least 1, got {clip_limit}"
        )));
    }
    let (w, h) = (img.width(), img.height());
    let tiles_x = w.div_ceil(tile.width);
    let tiles_y = h.div_ceil(tile.height);
    let tile_pixels = (tile.width * tile.height) as f64;

    let mut luts = Vec::with_capacity(tiles_x * tiles_y);
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            let mut hist = [0f64; 256];
            for y in ty * tile.height..(ty + 1) * tile.height {
                let sy = reflect(y as isize, h);
                for x in tx * tile.width..(tx + 1) * tile.width {
                    let sx = reflect(x as isize, w);
                    hist[img.get(sx, sy) as usize] += 1.0;
                }
            }
            luts.push(tile_lut(&mut hist, tile_pixels, clip_limit));
        }
    }

    let lut = |tx: usize, ty: usize| &luts[ty * tiles_x + tx];
    let locate = |p: usize, size: usize, count: usize| -> (usize, usize, f64) {
        // Position relative to tile centers; clamp to the outermost centers.
        let f = (p as f64 + 0.5) / size as f64 - 0.5;
        if f <= 0.0 {
            (0, 0, 0.0)
        } else if f >= (count - 1) as f64 {
            (count - 1, count - 1, 0.0)
        } else {
            let i = f.floor() as usize;
            (i, i + 1, f - i as f64)
        }
    };

    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1, fy) = locate(y, tile.height, tiles_y);
        for x in 0..w {
            let (x0, x1, fx) = locate(x, tile.width, tiles_x);
            let v = img.get(x, y) as usize;
            let top = lut(x0, y0)[v] * (1.0 - fx) + lut(x1, y0)[v] * fx;
            let bottom = lut(x0, y1)[v] * (1.0 - fx) + lut(x1, y1)[v] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    GrayImage::from_f64(w, h, &out)
}

fn tile_lut(hist: &mut [f64; 256], tile_pixels: f64, clip_limit: f64) -> [f64; 256] {
    if clip_limit.is_finite() {
        let limit = (clip_limit * tile_pixels / 256.0).max(1.0);
        let mut excess = 0.0;
        for bin in hist.iter_mut() {
            if *bin > limit {
                excess += *bin - limit;
                *bin = limit;
            }
        }
        let share = excess / 256.0;
        hist.iter_mut().for_each(|bin| *bin += share);
    }
    let mut lut = [0f64; 256];
    let mut cdf = 0.0;
    for (v, bin) in hist.iter().enumerate() {
        cdf += bin;
        lut[v] = 255.0 * cdf / tile_pixels;
    }
    lut
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> GrayImage {
        GrayImage::from_fn(64, 64, |x, y| (100 + (x + y) * 40 / 126) as u8)
    }

    fn range(img: &GrayImage) -> (u8, u8) {
        let d = img.data();
        (*d.iter().min().unwrap(), *d.iter().max().unwrap())
    }

    fn std_dev(img: &GrayImage) -> f64 {
        let v = img.to_f64();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    }

    #[test]
    fn constant_image_maps_to_constant() {
        let img = GrayImage::filled(64, 48, 90);
        let out = clahe(&img, TileSize::default_for(&img), 2.0).unwrap();
        let (lo, hi) = range(&out);
        assert_eq!(lo, hi);
    }

    #[test]
    fn ramp_dynamic_range_grows() {
        let img = ramp();
        let (lo, hi) = range(&img);
        assert_eq!((lo, hi), (100, 140));
        let out = clahe(&img, TileSize::default_for(&img), 2.0).unwrap();
        let (olo, ohi) = range(&out);
        assert!(ohi - olo > hi - lo, "{olo}..{ohi}");
    }

    #[test]
    fn contrast_monotone_in_clip_limit() {
        let img = ramp();
        let tile = TileSize::default_for(&img);
        let stds: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&c| std_dev(&clahe(&img, tile, c).unwrap()))
            .collect();
        for pair in stds.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "{stds:?}");
        }
    }

    #[test]
    fn uneven_tiles_are_padded() {
        let img = GrayImage::from_fn(50, 37, |x, y| ((x * 5 + y * 3) % 256) as u8);
        let out = clahe(&img, TileSize::default_for(&img), 2.0).unwrap();
        assert_eq!((out.width(), out.height()), (50, 37));
    }

    #[test]
    fn rejects_bad_clip_limit() {
        let img = ramp();
        assert!(clahe(&img, TileSize::default_for(&img), 0.5).is_err());
    }
}

use super::{BinaryImage, ForegroundMask, GrayImage, ImgError, BLOCK_SIZE};

/// Block variance (intensity squared) at or above which a block counts as foreground.
pub const DEFAULT_VAR_THRESHOLD: f64 = 150.0;

/// Local-variance segmentation: a block is foreground iff its gray-level
/// variance is at least `var_threshold`.
pub fn segment_foreground(img: &GrayImage, var_threshold: f64) -> Result<ForegroundMask, ImgError> {
    if !(var_threshold > 0.0) {
        return Err(ImgError::InvalidParameter(format!(
            "variance threshold must be positive, got {var_threshold}"
        )));
    }
    img.check_pipeline_size()?;
    let blocks_x = img.width() / BLOCK_SIZE;
    let blocks_y = img.height() / BLOCK_SIZE;
    let mut flags = Vec::with_capacity(blocks_x * blocks_y);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            flags.push(img.block(bx, by).variance() >= var_threshold);
        }
    }
    let mask = ForegroundMask::new(blocks_x, blocks_y, flags)?;
    if mask.count() == 0 {
        return Err(ImgError::AllBackground);
    }
    Ok(mask)
}

/// Otsu threshold over a 256-bin histogram.
///
/// Returns the smallest `t` in `0..=255` maximizing the between-class variance of
/// the split `{v < t}` / `{v >= t}`, or `None` when the histogram holds a single
/// gray value.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 || hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total_f = total as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();

    let mut best_t = 0usize;
    let mut best = -1.0f64;
    let mut w0 = 0u64;
    let mut sum0 = 0.0f64;
    // Candidate t puts values 0..t in the lower class.
    for t in 0..256usize {
        if t > 0 {
            w0 += hist[t - 1];
            sum0 += (t - 1) as f64 * hist[t - 1] as f64;
        }
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let p0 = w0 as f64 / total_f;
        let p1 = w1 as f64 / total_f;
        let mu0 = sum0 / w0 as f64;
        let mu1 = (sum_all - sum0) / w1 as f64;
        let between = p0 * p1 * (mu0 - mu1) * (mu0 - mu1);
        if between > best * (1.0 + 1e-12) {
            best = between;
            best_t = t;
        }
    }
    Some(best_t as u8)
}

fn foreground_histogram(img: &GrayImage, mask: &ForegroundMask) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for (bx, by) in mask.foreground_blocks() {
        for y in by * BLOCK_SIZE..(by + 1) * BLOCK_SIZE {
            for x in bx * BLOCK_SIZE..(bx + 1) * BLOCK_SIZE {
                hist[img.get(x, y) as usize] += 1;
            }
        }
    }
    hist
}

/// Global Otsu binarization computed over foreground pixels only.
///
/// Foreground pixels darker than the threshold become ridge; everything outside
/// foreground blocks is valley.
pub fn otsu_binarize(img: &GrayImage, mask: &ForegroundMask) -> Result<BinaryImage, ImgError> {
    mask.check_geometry(img.width(), img.height())?;
    let hist = foreground_histogram(img, mask);
    let t = otsu_threshold(&hist).ok_or(ImgError::DegenerateHistogram)?;
    Ok(BinaryImage::from_fn(img.width(), img.height(), |x, y| {
        mask.covers_pixel(x, y) && img.get(x, y) < t
    }))
}

/// Like [`otsu_binarize`], but a single-valued foreground yields an all-valley image.
pub fn otsu_binarize_or_blank(img: &GrayImage, mask: &ForegroundMask) -> Result<BinaryImage, ImgError> {
    match otsu_binarize(img, mask) {
        Err(ImgError::DegenerateHistogram) => {
            log::warn!("degenerate foreground histogram; using an all-valley binary image");
            Ok(BinaryImage::blank(img.width(), img.height()))
        }
        other => other,
    }
}

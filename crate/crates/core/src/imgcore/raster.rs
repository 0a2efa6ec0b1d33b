use super::ImgError;

/// Side length of the square blocks every block-wise statistic is computed on.
pub const BLOCK_SIZE: usize = 16;

/// Number of pixels in one block.
pub const BLOCK_PIXELS: usize = BLOCK_SIZE * BLOCK_SIZE;

/// 8-bit single-channel raster, row-major, 0 = black, 255 = white.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImgError> {
        if data.len() != width * height {
            return Err(ImgError::DataLength {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Builds an image from real-valued samples, rounding and clamping to `[0, 255]`.
    pub fn from_f64(width: usize, height: usize, values: &[f64]) -> Result<Self, ImgError> {
        let data = values.iter().map(|&v| to_u8(v)).collect();
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    /// Pipeline entry points require at least one full block.
    pub fn check_pipeline_size(&self) -> Result<(), ImgError> {
        if self.width < BLOCK_SIZE || self.height < BLOCK_SIZE {
            return Err(ImgError::TooSmall {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Copies the 16x16 block at block coordinates `(bx, by)`.
    pub fn block(&self, bx: usize, by: usize) -> Block {
        let mut pixels = [0u8; BLOCK_PIXELS];
        let x0 = bx * BLOCK_SIZE;
        let y0 = by * BLOCK_SIZE;
        for r in 0..BLOCK_SIZE {
            let start = (y0 + r) * self.width + x0;
            pixels[r * BLOCK_SIZE..(r + 1) * BLOCK_SIZE]
                .copy_from_slice(&self.data[start..start + BLOCK_SIZE]);
        }
        Block {
            pixels,
            origin: (bx, by),
        }
    }
}

#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 255.0) as u8
    }
}

/// Row-major boolean raster; `true` marks a ridge (black) pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImgError> {
        if bits.len() != width * height {
            return Err(ImgError::DataLength {
                expected: width * height,
                actual: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// All-valley image.
    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Out-of-range coordinates read as valley.
    #[inline]
    pub fn get_or_valley(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            false
        } else {
            self.bits[y as usize * self.width + x as usize]
        }
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count_ridge(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Copies the 16x16 block at block coordinates `(bx, by)`.
    pub fn block(&self, bx: usize, by: usize) -> BinaryImage {
        let x0 = bx * BLOCK_SIZE;
        let y0 = by * BLOCK_SIZE;
        BinaryImage::from_fn(BLOCK_SIZE, BLOCK_SIZE, |x, y| self.get(x0 + x, y0 + y))
    }

    /// Renders ridge pixels as 0 and valley pixels as 255.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 0 } else { 255 }).collect(),
        }
    }
}

/// A 16x16 gray block copied out of a larger image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub pixels: [u8; BLOCK_PIXELS],
    /// Block coordinates `(block_i, block_j)` of the source tile.
    pub origin: (usize, usize),
}

impl Block {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = [0u8; BLOCK_PIXELS];
        for y in 0..BLOCK_SIZE {
            for x in 0..BLOCK_SIZE {
                pixels[y * BLOCK_SIZE + x] = f(x, y);
            }
        }
        Self {
            pixels,
            origin: (0, 0),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * BLOCK_SIZE + x]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&v| f64::from(v)).sum::<f64>() / BLOCK_PIXELS as f64
    }

    /// Population variance about the block's own mean.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.pixels
            .iter()
            .map(|&v| {
                let d = f64::from(v) - mean;
                d * d
            })
            .sum::<f64>()
            / BLOCK_PIXELS as f64
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: BLOCK_SIZE,
            height: BLOCK_SIZE,
            data: self.pixels.to_vec(),
        }
    }
}

/// Per-block foreground flags over the full 16x16 tessellation.
///
/// Trailing partial rows and columns are not part of the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForegroundMask {
    blocks_x: usize,
    blocks_y: usize,
    flags: Vec<bool>,
}

impl ForegroundMask {
    pub fn new(blocks_x: usize, blocks_y: usize, flags: Vec<bool>) -> Result<Self, ImgError> {
        if flags.len() != blocks_x * blocks_y {
            return Err(ImgError::DataLength {
                expected: blocks_x * blocks_y,
                actual: flags.len(),
            });
        }
        Ok(Self {
            blocks_x,
            blocks_y,
            flags,
        })
    }

    /// Mask with every block of the image's grid set to foreground.
    pub fn full(width: usize, height: usize) -> Self {
        let blocks_x = width / BLOCK_SIZE;
        let blocks_y = height / BLOCK_SIZE;
        Self {
            blocks_x,
            blocks_y,
            flags: vec![true; blocks_x * blocks_y],
        }
    }

    #[inline]
    pub fn blocks_x(&self) -> usize {
        self.blocks_x
    }

    #[inline]
    pub fn blocks_y(&self) -> usize {
        self.blocks_y
    }

    #[inline]
    pub fn block_size(&self) -> usize {
        BLOCK_SIZE
    }

    #[inline]
    pub fn is_foreground(&self, bx: usize, by: usize) -> bool {
        self.flags[by * self.blocks_x + bx]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// `|FB|`, the number of foreground blocks.
    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Foreground block coordinates in row-major order.
    pub fn foreground_blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.blocks_y).flat_map(move |by| {
            (0..self.blocks_x).filter_map(move |bx| self.is_foreground(bx, by).then_some((bx, by)))
        })
    }

    /// Whether the pixel `(x, y)` lies inside a foreground block.
    pub fn covers_pixel(&self, x: usize, y: usize) -> bool {
        let bx = x / BLOCK_SIZE;
        let by = y / BLOCK_SIZE;
        bx < self.blocks_x && by < self.blocks_y && self.is_foreground(bx, by)
    }

    pub fn matches(&self, width: usize, height: usize) -> bool {
        self.blocks_x == width / BLOCK_SIZE && self.blocks_y == height / BLOCK_SIZE
    }

    pub(crate) fn check_geometry(&self, width: usize, height: usize) -> Result<(), ImgError> {
        if self.matches(width, height) {
            Ok(())
        } else {
            Err(ImgError::GeometryMismatch)
        }
    }
}

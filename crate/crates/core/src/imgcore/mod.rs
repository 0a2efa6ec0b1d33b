//! Raster primitives shared by the feature, preprocessing and enhancement stages.
//!
//! Everything here works on [`GrayImage`] (8-bit, row-major) and [`BinaryImage`]
//! (`true` = ridge). Block statistics always use the full 16x16 tessellation;
//! partial border blocks are left out of every [`ForegroundMask`].

mod clahe;
pub(crate) mod filters;
pub mod io;
mod orientation;
mod raster;
mod segment;
mod thin;

pub use clahe::{clahe, TileSize, DEFAULT_CLIP_LIMIT};
pub use filters::{gaussian_blur_f64, gaussian_kernel, gaussian_smooth, unsharp_mask, DEFAULT_SMOOTH_SIGMA};
pub(crate) use orientation::normalize_half_turn;
pub use orientation::{block_orientation, gradient_moments, rotate_block, rotate_image, GradientMoments};
pub use raster::{BinaryImage, Block, ForegroundMask, GrayImage, BLOCK_PIXELS, BLOCK_SIZE};
pub use segment::{
    otsu_binarize, otsu_binarize_or_blank, otsu_threshold, segment_foreground, DEFAULT_VAR_THRESHOLD,
};
pub use thin::{count_components, thin};

pub(crate) use raster::to_u8;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImgError {
    #[error("pixel buffer has {actual} entries, expected {expected}")]
    DataLength { expected: usize, actual: usize },
    #[error("image {width}x{height} is smaller than one 16x16 block")]
    TooSmall { width: usize, height: usize },
    #[error("no foreground block reaches the variance threshold")]
    AllBackground,
    #[error("foreground pixels take a single gray value")]
    DegenerateHistogram,
    #[error("block gradient is isotropic; orientation undefined")]
    IsotropicBlock,
    #[error("foreground mask does not match image geometry")]
    GeometryMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("image io: {0}")]
    Io(String),
}

//! 8-bit grayscale PGM (P5) and PNG input/output.

use std::io::Write;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ColorType, DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use super::{GrayImage, ImgError};

fn format_for(path: &Path) -> Result<ImageFormat, ImgError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm") => Ok(ImageFormat::Pnm),
        other => Err(ImgError::UnsupportedFormat(format!(
            "{}: extension {:?} (expected .pgm or .png)",
            path.display(),
            other.unwrap_or("")
        ))),
    }
}

/// Reads an 8-bit grayscale image. Color or 16-bit inputs are rejected.
pub fn read_gray(path: &Path) -> Result<GrayImage, ImgError> {
    let format = format_for(path)?;
    let reader = image::ImageReader::open(path)
        .map_err(|e| ImgError::Io(format!("{}: {e}", path.display())))?
        .with_guessed_format()
        .map_err(|e| ImgError::Io(format!("{}: {e}", path.display())))?;
    if reader.format() != Some(format) {
        return Err(ImgError::UnsupportedFormat(format!(
            "{}: content does not match its extension",
            path.display()
        )));
    }
    let decoded = reader
        .decode()
        .map_err(|e| ImgError::Io(format!("{}: {e}", path.display())))?;
    match decoded {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            GrayImage::new(w, h, buf.into_raw())
        }
        other => Err(ImgError::UnsupportedFormat(format!(
            "{}: color type {:?} is not 8-bit grayscale",
            path.display(),
            other.color()
        ))),
    }
}

/// Writes an 8-bit grayscale image; the format follows the file extension.
/// PGM output is binary P5.
pub fn write_gray(path: &Path, img: &GrayImage) -> Result<(), ImgError> {
    let io_err = |e: &dyn std::fmt::Display| ImgError::Io(format!("{}: {e}", path.display()));
    let (w, h) = (img.width() as u32, img.height() as u32);
    match format_for(path)? {
        ImageFormat::Pnm => {
            let file = std::fs::File::create(path).map_err(|e| io_err(&e))?;
            let mut writer = std::io::BufWriter::new(file);
            PnmEncoder::new(&mut writer)
                .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
                .write_image(img.data(), w, h, ExtendedColorType::L8)
                .map_err(|e| io_err(&e))?;
            writer.flush().map_err(|e| io_err(&e))
        }
        format => image::save_buffer_with_format(path, img.data(), w, h, ColorType::L8, format)
            .map_err(|e| io_err(&e)),
    }
}

/// Whether the path carries one of the supported image extensions.
pub fn is_supported_image(path: &Path) -> bool {
    format_for(path).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_png_and_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(23, 17, |x, y| (x * 11 + y * 7) as u8);
        for name in ["a.png", "a.pgm"] {
            let p = dir.path().join(name);
            write_gray(&p, &img).unwrap();
            assert_eq!(read_gray(&p).unwrap(), img);
        }
    }

    #[test]
    fn pgm_is_binary_p5() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.pgm");
        write_gray(&p, &GrayImage::filled(4, 4, 9)).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..2], b"P5");
    }

    #[test]
    fn color_png_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.png");
        image::save_buffer(&p, &[10u8; 4 * 4 * 3], 4, 4, ColorType::Rgb8).unwrap();
        assert!(matches!(read_gray(&p), Err(ImgError::UnsupportedFormat(_))));
    }

    #[test]
    fn unknown_extension_rejected() {
        assert!(matches!(
            read_gray(Path::new("x.bmp")),
            Err(ImgError::UnsupportedFormat(_))
        ));
    }
}

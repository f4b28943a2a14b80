//! Image decoding, bounding-box annotation and base64 PNG transport.

use std::io::Cursor;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use image::{DynamicImage, ImageFormat, RgbImage, RgbaImage};
use thiserror::Error;
use vqanle_core::pipeline::ImageSource;
use vqanle_core::raster::{draw_box, AnnotationStyle, PixelsMut, RasterError};
use vqanle_core::scene::{ImageRecord, SceneGraphObject};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("empty image data")]
    Empty,
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot encode PNG: {0}")]
    Encode(String),
    #[error("invalid base64: {0}")]
    Base64(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

pub fn decode(bytes: &[u8]) -> Result<DynamicImage, ImagingError> {
    if bytes.is_empty() {
        return Err(ImagingError::Empty);
    }
    image::load_from_memory(bytes).map_err(|e| ImagingError::Decode(e.to_string()))
}

/// 8-bit RGB, or RGBA when the source has alpha; other depths are reduced.
fn to_8bit(img: DynamicImage) -> DynamicImage {
    match img {
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => img,
        other if other.color().has_alpha() => DynamicImage::ImageRgba8(other.to_rgba8()),
        other => DynamicImage::ImageRgb8(other.to_rgb8()),
    }
}

pub fn encode_png(img: &DynamicImage) -> Result<Vec<u8>, ImagingError> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).map_err(|e| ImagingError::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

/// Draw a hollow box on a decoded image in place. Dimensions never change.
pub fn annotate_image(img: DynamicImage, obj: &SceneGraphObject, style: &AnnotationStyle) -> Result<DynamicImage, ImagingError> {
    let (w, h) = (img.width(), img.height());
    Ok(match to_8bit(img) {
        DynamicImage::ImageRgba8(buf) => {
            let mut raw = buf.into_raw();
            draw_box(&mut PixelsMut::new(&mut raw, w, h, 4)?, obj, style)?;
            DynamicImage::ImageRgba8(RgbaImage::from_raw(w, h, raw).expect("buffer size checked by PixelsMut"))
        }
        other => {
            let mut raw = other.to_rgb8().into_raw();
            draw_box(&mut PixelsMut::new(&mut raw, w, h, 3)?, obj, style)?;
            DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, raw).expect("buffer size checked by PixelsMut"))
        }
    })
}

/// Annotate encoded image bytes; output is always PNG.
pub fn annotate_bbox(bytes: &[u8], obj: &SceneGraphObject, style: &AnnotationStyle) -> Result<Vec<u8>, ImagingError> {
    encode_png(&annotate_image(decode(bytes)?, obj, style)?)
}

/// Standard base64 of a lossless PNG re-encoding.
pub fn encode_for_transport(bytes: &[u8]) -> Result<String, ImagingError> {
    let img = to_8bit(decode(bytes)?);
    Ok(STANDARD.encode(encode_png(&img)?))
}

pub fn decode_transport(text: &str) -> Result<DynamicImage, ImagingError> {
    let bytes = STANDARD.decode(text.trim()).map_err(|e| ImagingError::Base64(e.to_string()))?;
    decode(&bytes)
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, ImagingError> {
    std::fs::read(path).map_err(|e| ImagingError::Read { path: path.display().to_string(), message: e.to_string() })
}

/// Reads images from their record paths for the pipelines.
#[derive(Debug, Clone, Default)]
pub struct FileImages {
    pub style: AnnotationStyle,
}

impl ImageSource for FileImages {
    fn encode(&self, image: &ImageRecord) -> Result<String, String> {
        read_bytes(Path::new(&image.path)).and_then(|b| encode_for_transport(&b)).map_err(|e| e.to_string())
    }

    fn encode_annotated(&self, image: &ImageRecord, object: &SceneGraphObject) -> Result<String, String> {
        read_bytes(Path::new(&image.path))
            .and_then(|b| annotate_bbox(&b, object, &self.style))
            .map(|png| STANDARD.encode(png))
            .map_err(|e| e.to_string())
    }
}

//! Hollow bounding-box rasterization on decoded pixel buffers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::SceneGraphObject;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotationStyle {
    pub color: [u8; 3],
    pub thickness: u32,
}

impl Default for AnnotationStyle {
    fn default() -> Self {
        AnnotationStyle { color: [255, 0, 0], thickness: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RasterError {
    #[error("box has zero area after clamping to the {width}x{height} image")]
    ZeroArea { width: u32, height: u32 },
    #[error("thickness must be at least 1")]
    ZeroThickness,
    #[error("pixel buffer of {len} bytes does not match {width}x{height}x{channels}")]
    BadBuffer { len: usize, width: u32, height: u32, channels: usize },
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    /// Clamp an object box into the image; `None` when nothing remains.
    pub fn clamp(obj: &SceneGraphObject, width: u32, height: u32) -> Option<PixelRect> {
        let x0 = obj.x.min(width);
        let y0 = obj.y.min(height);
        let x_end = obj.x.saturating_add(obj.w).min(width);
        let y_end = obj.y.saturating_add(obj.h).min(height);
        if x_end <= x0 || y_end <= y0 {
            return None;
        }
        Some(PixelRect { x0, y0, x1: x_end - 1, y1: y_end - 1 })
    }

    fn width(&self) -> u32 {
        self.x1 - self.x0 + 1
    }

    fn height(&self) -> u32 {
        self.y1 - self.y0 + 1
    }
}

/// Mutable view of an interleaved 8-bit image (RGB or RGBA).
pub struct PixelsMut<'a> {
    data: &'a mut [u8],
    width: u32,
    height: u32,
    channels: usize,
}

impl<'a> PixelsMut<'a> {
    pub fn new(data: &'a mut [u8], width: u32, height: u32, channels: usize) -> Result<Self, RasterError> {
        if !(channels == 3 || channels == 4) || data.len() != width as usize * height as usize * channels {
            return Err(RasterError::BadBuffer { len: data.len(), width, height, channels });
        }
        Ok(PixelsMut { data, width, height, channels })
    }

    fn fill(&mut self, x0: u32, y0: u32, x1: u32, y1: u32, color: [u8; 3]) {
        for y in y0..=y1 {
            let row = y as usize * self.width as usize;
            for x in x0..=x1 {
                let at = (row + x as usize) * self.channels;
                self.data[at..at + 3].copy_from_slice(&color);
                if self.channels == 4 {
                    self.data[at + 3] = 255;
                }
            }
        }
    }
}

/// Draw the outline of `obj` with the band growing inward from the box edge,
/// so a full-frame box touches only the outer `thickness` pixels.
pub fn draw_box(pixels: &mut PixelsMut<'_>, obj: &SceneGraphObject, style: &AnnotationStyle) -> Result<PixelRect, RasterError> {
    if style.thickness == 0 {
        return Err(RasterError::ZeroThickness);
    }
    let r = PixelRect::clamp(obj, pixels.width, pixels.height)
        .ok_or(RasterError::ZeroArea { width: pixels.width, height: pixels.height })?;
    let t = style.thickness;
    if 2 * t >= r.width() || 2 * t >= r.height() {
        pixels.fill(r.x0, r.y0, r.x1, r.y1, style.color);
        return Ok(r);
    }
    let c = style.color;
    pixels.fill(r.x0, r.y0, r.x1, r.y0 + t - 1, c); // top
    pixels.fill(r.x0, r.y1 + 1 - t, r.x1, r.y1, c); // bottom
    pixels.fill(r.x0, r.y0 + t, r.x0 + t - 1, r.y1 - t, c); // left
    pixels.fill(r.x1 + 1 - t, r.y0 + t, r.x1, r.y1 - t, c); // right
    Ok(r)
}

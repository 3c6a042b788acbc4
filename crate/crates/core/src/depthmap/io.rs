//! 16-bit PNG depth maps: `depth = pixel / 256` meters, `0` = invalid.

use std::path::Path;

use image::{ImageBuffer, ImageFormat, Luma};

use super::{Grid, SparseDepthMap};
use crate::error::{Error, Result};

pub const DEPTH_PNG_SCALE: f64 = 256.0;

pub fn read_depth_png(path: &Path) -> Result<SparseDepthMap> {
    let img = image::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let img = match img {
        image::DynamicImage::ImageLuma16(buf) => buf,
        other => {
            return Err(Error::Io(format!(
                "{}: expected 16-bit single-channel PNG, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0[0] as f64 / DEPTH_PNG_SCALE).collect();
    SparseDepthMap::from_grid(Grid::new(w as usize, h as usize, data)?)
}

/// Writes `round(depth · 256)` clamped to the 16-bit range; nonpositive
/// depths are written as 0.
pub fn write_depth_png(path: &Path, grid: &Grid) -> Result<()> {
    let (w, h) = (grid.width() as u32, grid.height() as u32);
    let pixels: Vec<u16> = grid
        .data()
        .iter()
        .map(|d| {
            if *d > 0.0 {
                (d * DEPTH_PNG_SCALE).round().min(u16::MAX as f64) as u16
            } else {
                0
            }
        })
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(w, h, pixels)
        .ok_or_else(|| Error::Io("depth buffer does not match its dimensions".into()))?;
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

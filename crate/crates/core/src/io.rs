//! Lossless frame files.

use std::path::Path;

use image::{ExtendedColorType, ImageFormat};
use thiserror::Error;

use crate::types::{Frame, PixelFormat};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: image has zero size")]
    Empty { path: String },
}

/// Reads a PNG (or any format the `image` crate recognises) as an RGBA
/// frame, or GRAY8 when the file is single-channel 8-bit.
pub fn load_frame(path: &Path, id: u64, timestamp_us: u64) -> Result<Frame, IoError> {
    let err = |source| IoError::Image {
        path: path.display().to_string(),
        source,
    };
    let img = image::open(path).map_err(err)?;
    let (w, h) = (img.width(), img.height());
    let (format, data) = match img {
        image::DynamicImage::ImageLuma8(g) => (PixelFormat::Gray8, g.into_raw()),
        other => (PixelFormat::Rgba8, other.into_rgba8().into_raw()),
    };
    Frame::new(id, timestamp_us, w, h, format, data).map_err(|_| IoError::Empty {
        path: path.display().to_string(),
    })
}

pub fn save_frame(frame: &Frame, path: &Path) -> Result<(), IoError> {
    let color = match frame.format() {
        PixelFormat::Rgba8 => ExtendedColorType::Rgba8,
        PixelFormat::Gray8 => ExtendedColorType::L8,
    };
    image::save_buffer_with_format(
        path,
        frame.data(),
        frame.width(),
        frame.height(),
        color,
        ImageFormat::Png,
    )
    .map_err(|source| IoError::Image {
        path: path.display().to_string(),
        source,
    })
}

//! Pixel-level algorithms: matching, contours, hashing, inpainting and
//! scroll displacement.

mod components;
mod contour;
mod fftcorr;
mod hash;
mod inpaint;
mod multiscale;
mod ncc;
mod scroll;

pub use components::{components8, Component};
pub use contour::{contourize, trace_contours, Contour, ContourKind, ContourSet};
pub use hash::{average_hash, hamming};
pub use inpaint::{inpaint_fmm, inpaint_fmm_mask, inpaint_majority, majority_color};
pub use multiscale::{
    default_scale_ladder, match_multiscale, non_max_suppression, MatchConfig, MatchMode,
    MultiScaleMatcher, TemplateSpec,
};
pub use ncc::{ncc_match, ScoreMap};
pub use scroll::{
    detect_scroll, match_strips, ScrollParams, StripMatch, MAX_HASH_DISTANCE, MIN_STRIPS,
};

use thiserror::Error;

use crate::types::{Frame, PixelFormat, Region};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImagingError {
    #[error("template {tw}x{th} does not fit in image {iw}x{ih}")]
    TemplateTooLarge { tw: u32, th: u32, iw: u32, ih: u32 },
    #[error("image buffer holds {actual} bytes, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("frames differ in size: {a:?} vs {b:?}")]
    DimensionMismatch { a: (u32, u32), b: (u32, u32) },
    #[error("region {region:?} is outside the {width}x{height} frame")]
    RegionOutOfBounds {
        region: Region,
        width: u32,
        height: u32,
    },
    #[error("region covers the whole frame; nothing is left to sample from")]
    Degenerate,
    #[error("invalid match configuration: {0}")]
    BadConfig(String),
    #[error("inpaint radius must be at least 1")]
    BadRadius,
}

/// Single-channel 8-bit image, row-major, no padding.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImagingError> {
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(ImagingError::BufferSize {
                expected,
                actual: data.len(),
            });
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        GrayImage {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        &self.data[y as usize * w..(y as usize + 1) * w]
    }

    /// Copies out `region`; the caller guarantees it is in bounds.
    pub fn crop(&self, region: Region) -> GrayImage {
        GrayImage::from_fn(region.w, region.h, |x, y| {
            self.get(region.x + x, region.y + y)
        })
    }

    /// Pastes `src` with its top-left at `(x, y)`, clipping at the borders.
    pub fn paste(&mut self, src: &GrayImage, x: u32, y: u32) {
        for sy in 0..src.height {
            for sx in 0..src.width {
                let (dx, dy) = (x + sx, y + sy);
                if dx < self.width && dy < self.height {
                    self.set(dx, dy, src.get(sx, sy));
                }
            }
        }
    }

    /// Wraps the pixels as a GRAY8 frame.
    pub fn to_frame(&self, id: u64) -> Frame {
        Frame::new(
            id,
            0,
            self.width,
            self.height,
            PixelFormat::Gray8,
            self.data.clone(),
        )
        .expect("gray image has positive size")
    }
}

/// Luma of an RGB triple: `round(0.299 R + 0.587 G + 0.114 B)`.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b) + 500) / 1000) as u8
}

pub fn to_gray(frame: &Frame) -> GrayImage {
    let data = match frame.format() {
        PixelFormat::Gray8 => frame.data().to_vec(),
        PixelFormat::Rgba8 => frame
            .data()
            .chunks_exact(4)
            .map(|p| luma(p[0], p[1], p[2]))
            .collect(),
    };
    GrayImage {
        width: frame.width(),
        height: frame.height(),
        data,
    }
}

/// Output size of a nearest-neighbour resize: `floor(dim * scale)`, at least 1.
pub fn scaled_dim(dim: u32, scale: f64) -> u32 {
    ((f64::from(dim) * scale).floor() as u32).max(1)
}

/// Nearest-neighbour resize by `scale`.
pub fn resize_nearest(img: &GrayImage, scale: f64) -> GrayImage {
    resize_to(
        img,
        scaled_dim(img.width, scale),
        scaled_dim(img.height, scale),
    )
}

/// Nearest-neighbour resize to explicit dimensions. Output pixel `x` samples
/// source column `floor(x * src_w / dst_w)`.
pub fn resize_to(img: &GrayImage, width: u32, height: u32) -> GrayImage {
    resample_nearest(img.width, img.height, width, height, |x, y| img.get(x, y)).into()
}

pub(crate) fn resample_nearest<T: Copy>(
    src_w: u32,
    src_h: u32,
    width: u32,
    height: u32,
    src: impl Fn(u32, u32) -> T,
) -> GrayImageOf<T> {
    let xs: Vec<u32> = (0..width)
        .map(|x| (u64::from(x) * u64::from(src_w) / u64::from(width)) as u32)
        .collect();
    let mut data = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height {
        let sy = (u64::from(y) * u64::from(src_h) / u64::from(height)) as u32;
        data.extend(xs.iter().map(|&sx| src(sx, sy)));
    }
    GrayImageOf {
        width,
        height,
        data,
    }
}

/// Generic pixel grid used by the resampler; `GrayImage` is the `u8` case.
pub(crate) struct GrayImageOf<T> {
    pub width: u32,
    pub height: u32,
    pub data: Vec<T>,
}

impl From<GrayImageOf<u8>> for GrayImage {
    fn from(g: GrayImageOf<u8>) -> Self {
        GrayImage {
            width: g.width,
            height: g.height,
            data: g.data,
        }
    }
}

/// Nearest-neighbour resize of a tightly packed RGBA buffer.
pub fn resize_rgba_nearest(
    pixels: &[u8],
    src_w: u32,
    src_h: u32,
    width: u32,
    height: u32,
) -> Vec<u8> {
    let grid = resample_nearest(src_w, src_h, width, height, |x, y| {
        let i = (y as usize * src_w as usize + x as usize) * 4;
        [pixels[i], pixels[i + 1], pixels[i + 2], pixels[i + 3]]
    });
    grid.data.into_iter().flatten().collect()
}

/// Summed-area tables of pixel values and squared values, `(w+1) x (h+1)`.
pub(crate) struct Integral {
    stride: usize,
    sum: Vec<u64>,
    sq: Vec<u64>,
}

impl Integral {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width as usize, img.height as usize);
        let stride = w + 1;
        let mut sum = vec![0u64; stride * (h + 1)];
        let mut sq = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let (mut rs, mut rq) = (0u64, 0u64);
            for x in 0..w {
                let v = u64::from(img.data[y * w + x]);
                rs += v;
                rq += v * v;
                sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + rs;
                sq[(y + 1) * stride + x + 1] = sq[y * stride + x + 1] + rq;
            }
        }
        Integral { stride, sum, sq }
    }

    /// `(sum, sum of squares)` over the `w x h` window at `(x, y)`.
    #[inline]
    pub fn window(&self, x: usize, y: usize, w: usize, h: usize) -> (u64, u64) {
        let s = self.stride;
        let a = y * s + x;
        let b = y * s + x + w;
        let c = (y + h) * s + x;
        let d = (y + h) * s + x + w;
        (
            self.sum[d] + self.sum[a] - self.sum[b] - self.sum[c],
            self.sq[d] + self.sq[a] - self.sq[b] - self.sq[c],
        )
    }
}

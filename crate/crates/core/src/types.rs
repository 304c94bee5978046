//! Value types shared by every stage of the pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Errors raised when constructing domain values.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("frame dimensions must be positive, got {width}x{height}")]
    EmptyFrame { width: u32, height: u32 },
    #[error("pixel buffer holds {actual} bytes, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("region must have positive size, got {w}x{h}")]
    EmptyRegion { w: u32, h: u32 },
    #[error("{field} = {value} is outside [0, 1]")]
    OutOfUnitRange { field: &'static str, value: String },
    #[error("scale must be positive, got {0}")]
    BadScale(String),
    #[error("patch payload holds {actual} bytes, expected {expected}")]
    PatchSize { expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelFormat {
    Rgba8,
    Gray8,
}

impl PixelFormat {
    pub fn bytes_per_pixel(self) -> usize {
        match self {
            PixelFormat::Rgba8 => 4,
            PixelFormat::Gray8 => 1,
        }
    }
}

/// A non-premultiplied RGBA colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rgba(pub [u8; 4]);

impl Rgba {
    pub const BLACK: Rgba = Rgba([0, 0, 0, 255]);
    pub const WHITE: Rgba = Rgba([255, 255, 255, 255]);

    pub const fn new(r: u8, g: u8, b: u8, a: u8) -> Self {
        Rgba([r, g, b, a])
    }

    pub const fn opaque(r: u8, g: u8, b: u8) -> Self {
        Rgba([r, g, b, 255])
    }

    /// Packs as `0xRRGGBBAA`.
    pub fn packed(self) -> u32 {
        u32::from_be_bytes(self.0)
    }

    pub fn from_packed(v: u32) -> Self {
        Rgba(v.to_be_bytes())
    }
}

impl fmt::Display for Rgba {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r, g, b, a] = self.0;
        write!(f, "#{r:02x}{g:02x}{b:02x}{a:02x}")
    }
}

/// A screen image flowing through the pipeline.
///
/// Pixel data is shared and never mutated after construction, so cloning a
/// frame is cheap and frames can be handed to concurrent hooks freely.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    id: u64,
    timestamp_us: u64,
    width: u32,
    height: u32,
    format: PixelFormat,
    data: Arc<[u8]>,
}

impl Frame {
    pub fn new(
        id: u64,
        timestamp_us: u64,
        width: u32,
        height: u32,
        format: PixelFormat,
        data: Vec<u8>,
    ) -> Result<Self, TypeError> {
        if width == 0 || height == 0 {
            return Err(TypeError::EmptyFrame { width, height });
        }
        let expected = width as usize * height as usize * format.bytes_per_pixel();
        if data.len() != expected {
            return Err(TypeError::BufferSize {
                expected,
                actual: data.len(),
            });
        }
        Ok(Frame {
            id,
            timestamp_us,
            width,
            height,
            format,
            data: data.into(),
        })
    }

    /// A frame filled with one colour.
    pub fn solid(id: u64, width: u32, height: u32, color: Rgba) -> Result<Self, TypeError> {
        let n = width as usize * height as usize;
        let data = color.0.iter().copied().cycle().take(n * 4).collect();
        Frame::new(id, 0, width, height, PixelFormat::Rgba8, data)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn timestamp_us(&self) -> u64 {
        self.timestamp_us
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn format(&self) -> PixelFormat {
        self.format
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn bounds(&self) -> Region {
        Region {
            x: 0,
            y: 0,
            w: self.width,
            h: self.height,
        }
    }

    /// Same pixels under a new id and timestamp.
    pub fn with_id(&self, id: u64, timestamp_us: u64) -> Frame {
        Frame {
            id,
            timestamp_us,
            ..self.clone()
        }
    }

    /// The pixel at `(x, y)` as RGBA; gray pixels expand to opaque gray.
    pub fn rgba_at(&self, x: u32, y: u32) -> Rgba {
        let i = y as usize * self.width as usize + x as usize;
        match self.format {
            PixelFormat::Rgba8 => {
                let p = &self.data[i * 4..i * 4 + 4];
                Rgba([p[0], p[1], p[2], p[3]])
            }
            PixelFormat::Gray8 => {
                let g = self.data[i];
                Rgba([g, g, g, 255])
            }
        }
    }

    /// The whole frame as a tightly packed RGBA buffer.
    pub fn to_rgba_vec(&self) -> Vec<u8> {
        match self.format {
            PixelFormat::Rgba8 => self.data.to_vec(),
            PixelFormat::Gray8 => self.data.iter().flat_map(|&g| [g, g, g, 255]).collect(),
        }
    }

    /// Pixels of `region` as a tightly packed RGBA buffer.
    pub fn crop_rgba(&self, region: Region) -> Vec<u8> {
        let mut out = Vec::with_capacity(region.area() * 4);
        for y in region.y..region.bottom() {
            for x in region.x..region.right() {
                out.extend_from_slice(&self.rgba_at(x, y).0);
            }
        }
        out
    }
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Frame")
            .field("id", &self.id)
            .field("timestamp_us", &self.timestamp_us)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("format", &self.format)
            .field("bytes", &self.data.len())
            .finish()
    }
}

/// An axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Region {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Result<Self, TypeError> {
        if w == 0 || h == 0 {
            return Err(TypeError::EmptyRegion { w, h });
        }
        Ok(Region { x, y, w, h })
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w as usize * self.h as usize
    }

    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        self.w > 0
            && self.h > 0
            && u64::from(self.x) + u64::from(self.w) <= u64::from(width)
            && u64::from(self.y) + u64::from(self.h) <= u64::from(height)
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn intersection(&self, other: &Region) -> Option<Region> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Region {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        })
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.intersection(other).is_some()
    }

    pub fn union(&self, other: &Region) -> Region {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = self.right().max(other.right());
        let y1 = self.bottom().max(other.bottom());
        Region {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        }
    }

    pub fn iou(&self, other: &Region) -> f64 {
        let inter = self.intersection(other).map_or(0, |r| r.area());
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// A scored, labelled region emitted by a detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub region: Region,
    pub score: f64,
    pub scale: f64,
    pub label: String,
}

impl Detection {
    pub fn new(
        region: Region,
        score: f64,
        scale: f64,
        label: impl Into<String>,
    ) -> Result<Self, TypeError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(TypeError::OutOfUnitRange {
                field: "score",
                value: score.to_string(),
            });
        }
        if !(scale > 0.0) {
            return Err(TypeError::BadScale(scale.to_string()));
        }
        Ok(Detection {
            region,
            score,
            scale,
            label: label.into(),
        })
    }
}

/// Default draw-order bands: inpainting below boxes below labels below veils.
pub mod z {
    pub const PATCH: i16 = 10;
    pub const FILL_RECT: i16 = 20;
    pub const LABEL: i16 = 30;
    pub const VEIL: i16 = 40;
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    FillRect {
        region: Region,
        color: Rgba,
    },
    /// `pixels` is tightly packed RGBA, `region.w * region.h * 4` bytes.
    Patch {
        region: Region,
        pixels: Vec<u8>,
    },
    Veil {
        alpha: f32,
        color: Rgba,
    },
    Label {
        region: Region,
        text: String,
        color: Rgba,
    },
}

impl OpKind {
    pub fn region(&self) -> Option<Region> {
        match self {
            OpKind::FillRect { region, .. }
            | OpKind::Patch { region, .. }
            | OpKind::Label { region, .. } => Some(*region),
            OpKind::Veil { .. } => None,
        }
    }
}

/// One draw operation of an overlay.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayOp {
    pub kind: OpKind,
    pub z: i16,
}

impl OverlayOp {
    pub fn fill_rect(region: Region, color: Rgba) -> Self {
        OverlayOp {
            kind: OpKind::FillRect { region, color },
            z: z::FILL_RECT,
        }
    }

    pub fn patch(region: Region, pixels: Vec<u8>) -> Result<Self, TypeError> {
        let expected = region.area() * 4;
        if pixels.len() != expected {
            return Err(TypeError::PatchSize {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(OverlayOp {
            kind: OpKind::Patch { region, pixels },
            z: z::PATCH,
        })
    }

    /// A patch of one flat colour.
    pub fn solid_patch(region: Region, color: Rgba) -> Self {
        let pixels = color
            .0
            .iter()
            .copied()
            .cycle()
            .take(region.area() * 4)
            .collect();
        OverlayOp {
            kind: OpKind::Patch { region, pixels },
            z: z::PATCH,
        }
    }

    pub fn veil(alpha: f32, color: Rgba) -> Result<Self, TypeError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(TypeError::OutOfUnitRange {
                field: "alpha",
                value: alpha.to_string(),
            });
        }
        Ok(OverlayOp {
            kind: OpKind::Veil { alpha, color },
            z: z::VEIL,
        })
    }

    pub fn label(region: Region, text: impl Into<String>, color: Rgba) -> Self {
        OverlayOp {
            kind: OpKind::Label {
                region,
                text: text.into(),
                color,
            },
            z: z::LABEL,
        }
    }

    pub fn with_z(mut self, z: i16) -> Self {
        self.z = z;
        self
    }

    pub fn region(&self) -> Option<Region> {
        self.kind.region()
    }
}

/// Draw operations answering one frame, in draw order.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayPlan {
    pub frame_id: u64,
    pub ops: Vec<OverlayOp>,
}

impl OverlayPlan {
    pub fn empty(frame_id: u64) -> Self {
        OverlayPlan {
            frame_id,
            ops: Vec::new(),
        }
    }

    /// Builds a plan from ops listed in (hook registration, emission) order.
    /// The sort is stable, so equal-z ops keep that order.
    pub fn from_ordered_ops(frame_id: u64, mut ops: Vec<OverlayOp>) -> Self {
        ops.sort_by_key(|op| op.z);
        OverlayPlan { frame_id, ops }
    }

    pub fn is_sorted(&self) -> bool {
        self.ops.windows(2).all(|w| w[0].z <= w[1].z)
    }
}

/// Timing of one frame through the server or offline runner.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LatencyRecord {
    pub frame_id: u64,
    pub t_receive_us: u64,
    pub t_plan_ready_us: u64,
    pub t_sent_us: u64,
    pub per_hook_us: BTreeMap<String, u64>,
    /// Hooks that failed on this frame, with their error message.
    pub skipped: BTreeMap<String, String>,
}

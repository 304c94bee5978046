//! Minimal RGBA raster used by the screen generator.

use super::atlas::GlyphAtlas;
use crate::imaging::{resize_rgba_nearest, scaled_dim};
use crate::types::{Frame, PixelFormat, Rgba};

#[derive(Clone, PartialEq, Eq)]
pub struct Canvas {
    width: u32,
    height: u32,
    px: Vec<u8>,
}

impl std::fmt::Debug for Canvas {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Canvas({}x{})", self.width, self.height)
    }
}

impl Canvas {
    pub fn new(width: u32, height: u32, bg: Rgba) -> Self {
        let px = bg.0.repeat(width as usize * height as usize);
        Canvas { width, height, px }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.px
    }

    pub fn get(&self, x: u32, y: u32) -> Rgba {
        let i = (y as usize * self.width as usize + x as usize) * 4;
        Rgba([self.px[i], self.px[i + 1], self.px[i + 2], self.px[i + 3]])
    }

    /// Sets one pixel; coordinates outside the canvas are ignored.
    pub fn set(&mut self, x: i64, y: i64, c: Rgba) {
        if x < 0 || y < 0 || x >= i64::from(self.width) || y >= i64::from(self.height) {
            return;
        }
        let i = (y as usize * self.width as usize + x as usize) * 4;
        self.px[i..i + 4].copy_from_slice(&c.0);
    }

    pub fn fill_rect(&mut self, x: i64, y: i64, w: u32, h: u32, c: Rgba) {
        for yy in y..y + i64::from(h) {
            for xx in x..x + i64::from(w) {
                self.set(xx, yy, c);
            }
        }
    }

    /// Pixels whose centres lie at distance in `(r_in, r_out]` from
    /// `(cx, cy)`. A negative `r_in` gives a filled disc.
    pub fn ring(&mut self, cx: f64, cy: f64, r_in: f64, r_out: f64, c: Rgba) {
        let (x0, x1) = ((cx - r_out).floor() as i64, (cx + r_out).ceil() as i64);
        let (y0, y1) = ((cy - r_out).floor() as i64, (cy + r_out).ceil() as i64);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                let d2 = dx * dx + dy * dy;
                if d2 <= r_out * r_out && (r_in < 0.0 || d2 > r_in * r_in) {
                    self.set(x, y, c);
                }
            }
        }
    }

    pub fn disc(&mut self, cx: f64, cy: f64, r: f64, c: Rgba) {
        self.ring(cx, cy, -1.0, r, c);
    }

    pub fn text(&mut self, atlas: &GlyphAtlas, x: i64, y: i64, text: &str, scale: u32, c: Rgba) {
        atlas.rasterize(text, scale, |dx, dy| {
            self.set(x + i64::from(dx), y + i64::from(dy), c)
        });
    }

    pub fn blit(&mut self, x: i64, y: i64, src: &Canvas) {
        for sy in 0..src.height {
            for sx in 0..src.width {
                self.set(x + i64::from(sx), y + i64::from(sy), src.get(sx, sy));
            }
        }
    }

    /// Nearest-neighbour rescale; output size follows the imaging resize.
    pub fn resized(&self, scale: f64) -> Canvas {
        let (w, h) = (
            scaled_dim(self.width, scale),
            scaled_dim(self.height, scale),
        );
        Canvas {
            width: w,
            height: h,
            px: resize_rgba_nearest(&self.px, self.width, self.height, w, h),
        }
    }

    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Canvas {
        let mut out = Canvas::new(w, h, Rgba::BLACK);
        for yy in 0..h {
            for xx in 0..w {
                out.set(i64::from(xx), i64::from(yy), self.get(x + xx, y + yy));
            }
        }
        out
    }

    pub fn to_frame(&self, id: u64, timestamp_us: u64) -> Frame {
        Frame::new(
            id,
            timestamp_us,
            self.width,
            self.height,
            PixelFormat::Rgba8,
            self.px.clone(),
        )
        .expect("canvas buffers are sized by construction")
    }
}

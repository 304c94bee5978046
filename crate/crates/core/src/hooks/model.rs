//! Pluggable detectors and text classifiers.

use thiserror::Error;

use crate::imaging::components8;
use crate::types::{Detection, Frame};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ModelError(pub String);

/// Anything that turns a frame into detections. `infer` must be
/// deterministic for a given instance.
pub trait DetectorModel: Send + Sync {
    fn name(&self) -> &str;
    fn infer(&self, frame: &Frame) -> Result<Vec<Detection>, ModelError>;
}

/// Scores a line of text in `[0, 1]`.
pub trait TextClassifier: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, text: &str) -> f64;
}

/// Classifier backed by a closure.
pub struct FnClassifier<F> {
    name: String,
    f: F,
}

impl<F: Fn(&str) -> f64 + Send + Sync> FnClassifier<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnClassifier {
            name: name.into(),
            f,
        }
    }
}

impl<F: Fn(&str) -> f64 + Send + Sync> TextClassifier for FnClassifier<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, text: &str) -> f64 {
        (self.f)(text)
    }
}

/// Boxes 8-connected blobs of pixels whose RGB lies inside an inclusive
/// per-channel range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorRangeDetector {
    pub name: String,
    pub label: String,
    pub lo: [u8; 3],
    pub hi: [u8; 3],
    pub min_area: u32,
}

impl ColorRangeDetector {
    /// Light skin tones: R >= 200, 140 <= G <= 190, 110 <= B <= 160.
    pub fn skin() -> Self {
        ColorRangeDetector {
            name: "skin_range".into(),
            label: "skin".into(),
            lo: [200, 140, 110],
            hi: [255, 190, 160],
            min_area: 64,
        }
    }

    pub fn matches(&self, px: [u8; 3]) -> bool {
        (0..3).all(|c| (self.lo[c]..=self.hi[c]).contains(&px[c]))
    }
}

impl DetectorModel for ColorRangeDetector {
    fn name(&self) -> &str {
        &self.name
    }

    fn infer(&self, frame: &Frame) -> Result<Vec<Detection>, ModelError> {
        let rgba = frame.to_rgba_vec();
        let hit = |i: usize| self.matches([rgba[4 * i], rgba[4 * i + 1], rgba[4 * i + 2]]);
        let out = components8(frame.width(), frame.height(), hit)
            .into_iter()
            .filter(|c| c.area >= self.min_area)
            .map(|c| Detection {
                region: c.bbox,
                score: c.area as f64 / c.bbox.area() as f64,
                scale: 1.0,
                label: self.label.clone(),
            })
            .collect();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Region, Rgba};

    #[test]
    fn finds_planted_patches() {
        let mut px = Rgba::opaque(255, 255, 255).0.repeat(50 * 40);
        for (x0, y0) in [(5u32, 5u32), (30, 20)] {
            for y in y0..y0 + 12 {
                for x in x0..x0 + 10 {
                    let i = (y * 50 + x) as usize * 4;
                    px[i..i + 4].copy_from_slice(&[230, 170, 140, 255]);
                }
            }
        }
        let f = Frame::new(0, 0, 50, 40, crate::types::PixelFormat::Rgba8, px).unwrap();
        let d = ColorRangeDetector::skin().infer(&f).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(
            d[0].region,
            Region {
                x: 5,
                y: 5,
                w: 10,
                h: 12
            }
        );
        assert_eq!(
            d[1].region,
            Region {
                x: 30,
                y: 20,
                w: 10,
                h: 12
            }
        );
        assert_eq!(d[0].score, 1.0);
    }
}

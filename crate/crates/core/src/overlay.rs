//! Compositing overlay plans onto frames.

use thiserror::Error;

use crate::corpus::atlas::{GlyphAtlas, GLYPH_H};
use crate::types::{Frame, OpKind, OverlayPlan, PixelFormat, Region, Rgba};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompositeError {
    #[error("plan answers frame {plan} but frame {frame} was supplied")]
    FrameMismatch { plan: u64, frame: u64 },
    #[error("op {index} region {region:?} exceeds the {width}x{height} frame")]
    OutOfBounds {
        index: usize,
        region: Region,
        width: u32,
        height: u32,
    },
}

/// `round(x / 255)` with halves rounded up.
#[inline]
fn div255(x: u32) -> u8 {
    ((2 * x + 255) / 510) as u8
}

/// Non-premultiplied source-over of one pixel.
#[inline]
fn blend(dst: &mut [u8], src: Rgba) {
    let a = u32::from(src.0[3]);
    if a == 0 {
        return;
    }
    let inv = 255 - a;
    for c in 0..3 {
        dst[c] = div255(u32::from(src.0[c]) * a + u32::from(dst[c]) * inv);
    }
    dst[3] = div255(255 * a + u32::from(dst[3]) * inv);
}

/// Applies `plan` to `frame` and returns the composited RGBA frame.
///
/// Ops are drawn in plan order. Gray frames are expanded to RGBA first.
pub fn composite(frame: &Frame, plan: &OverlayPlan) -> Result<Frame, CompositeError> {
    if plan.frame_id != frame.id() {
        return Err(CompositeError::FrameMismatch {
            plan: plan.frame_id,
            frame: frame.id(),
        });
    }
    let (width, height) = (frame.width(), frame.height());
    for (index, op) in plan.ops.iter().enumerate() {
        if let Some(region) = op.region() {
            if !region.fits_within(width, height) {
                return Err(CompositeError::OutOfBounds {
                    index,
                    region,
                    width,
                    height,
                });
            }
        }
    }

    let mut buf = frame.to_rgba_vec();
    let stride = width as usize * 4;
    let atlas = GlyphAtlas::new();

    for op in &plan.ops {
        match &op.kind {
            OpKind::FillRect { region, color } => {
                for y in region.y..region.bottom() {
                    let row = &mut buf[y as usize * stride..(y as usize + 1) * stride];
                    for x in region.x..region.right() {
                        blend(&mut row[x as usize * 4..x as usize * 4 + 4], *color);
                    }
                }
            }
            OpKind::Patch { region, pixels } => {
                let w = region.w as usize * 4;
                for (i, y) in (region.y..region.bottom()).enumerate() {
                    let start = y as usize * stride + region.x as usize * 4;
                    buf[start..start + w].copy_from_slice(&pixels[i * w..(i + 1) * w]);
                }
            }
            OpKind::Veil { alpha, color } => {
                let a = (f64::from(*alpha) * f64::from(color.0[3]) + 0.5).floor() as u8;
                let src = Rgba([color.0[0], color.0[1], color.0[2], a]);
                for px in buf.chunks_exact_mut(4) {
                    blend(px, src);
                }
            }
            OpKind::Label {
                region,
                text,
                color,
            } => {
                let scale = (region.h / GLYPH_H).max(1);
                atlas.rasterize(text, scale, |dx, dy| {
                    if dx < region.w && dy < region.h {
                        let (x, y) = ((region.x + dx) as usize, (region.y + dy) as usize);
                        blend(&mut buf[y * stride + x * 4..y * stride + x * 4 + 4], *color);
                    }
                });
            }
        }
    }

    Ok(Frame::new(
        frame.id(),
        frame.timestamp_us(),
        width,
        height,
        PixelFormat::Rgba8,
        buf,
    )
    .expect("composited buffer matches source dimensions"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{z, OverlayOp};
    use proptest::prelude::*;

    fn white(w: u32, h: u32) -> Frame {
        Frame::solid(7, w, h, Rgba::WHITE).unwrap()
    }

    #[test]
    fn empty_plan_is_identity() {
        let f = white(5, 3);
        let out = composite(&f, &OverlayPlan::empty(7)).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn opaque_fill_blacks_out_quadrant() {
        let f = white(4, 4);
        let plan = OverlayPlan::from_ordered_ops(
            7,
            vec![OverlayOp::fill_rect(
                Region::new(0, 0, 2, 2).unwrap(),
                Rgba::BLACK,
            )],
        );
        let out = composite(&f, &plan).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expect = if x < 2 && y < 2 {
                    Rgba::BLACK
                } else {
                    Rgba::WHITE
                };
                assert_eq!(out.rgba_at(x, y), expect, "({x},{y})");
            }
        }
    }

    #[test]
    fn full_veil_is_black() {
        let f = white(8, 8);
        let plan =
            OverlayPlan::from_ordered_ops(7, vec![OverlayOp::veil(1.0, Rgba::BLACK).unwrap()]);
        let out = composite(&f, &plan).unwrap();
        assert!(out.data().chunks(4).all(|p| p == [0, 0, 0, 255]));
    }

    #[test]
    fn blend_rounds_to_nearest() {
        let mut px = [255u8, 255, 255, 255];
        blend(&mut px, Rgba::new(0, 0, 0, 128));
        assert_eq!(px, [127, 127, 127, 255]);
        let mut px = [0u8, 0, 0, 255];
        blend(&mut px, Rgba::new(100, 100, 100, 128));
        // 100 * 128 / 255 = 50.196
        assert_eq!(px, [50, 50, 50, 255]);
        assert_eq!(div255(127), 0);
        assert_eq!(div255(128), 1);
    }

    #[test]
    fn patch_replaces_pixels() {
        let f = white(3, 3);
        let r = Region::new(1, 1, 2, 1).unwrap();
        let plan = OverlayPlan::from_ordered_ops(
            7,
            vec![OverlayOp::patch(r, vec![1, 2, 3, 4, 5, 6, 7, 8]).unwrap()],
        );
        let out = composite(&f, &plan).unwrap();
        assert_eq!(out.rgba_at(1, 1), Rgba::new(1, 2, 3, 4));
        assert_eq!(out.rgba_at(2, 1), Rgba::new(5, 6, 7, 8));
        assert_eq!(out.rgba_at(0, 1), Rgba::WHITE);
    }

    #[test]
    fn label_draws_glyph_pixels() {
        let f = white(12, 7);
        let plan = OverlayPlan::from_ordered_ops(
            7,
            vec![OverlayOp::label(
                Region::new(0, 0, 12, 7).unwrap(),
                "I",
                Rgba::BLACK,
            )],
        );
        let out = composite(&f, &plan).unwrap();
        // 'I' has a full top bar and a centre stem.
        assert_eq!(out.rgba_at(0, 0), Rgba::BLACK);
        assert_eq!(out.rgba_at(2, 3), Rgba::BLACK);
        assert_eq!(out.rgba_at(0, 3), Rgba::WHITE);
        assert_eq!(out.rgba_at(6, 0), Rgba::WHITE);
    }

    #[test]
    fn errors_name_the_op() {
        let f = white(4, 4);
        let plan = OverlayPlan {
            frame_id: 7,
            ops: vec![
                OverlayOp::fill_rect(Region::new(0, 0, 1, 1).unwrap(), Rgba::BLACK),
                OverlayOp::fill_rect(Region::new(3, 3, 2, 1).unwrap(), Rgba::BLACK),
            ],
        };
        assert!(matches!(
            composite(&f, &plan),
            Err(CompositeError::OutOfBounds { index: 1, .. })
        ));
        assert!(matches!(
            composite(&f, &OverlayPlan::empty(8)),
            Err(CompositeError::FrameMismatch { plan: 8, frame: 7 })
        ));
    }

    fn arb_op(w: u32, h: u32) -> impl Strategy<Value = OverlayOp> {
        let region = (0..w, 0..h).prop_flat_map(move |(x, y)| {
            (Just(x), Just(y), 1..=w - x, 1..=h - y)
                .prop_map(|(x, y, w, h)| Region::new(x, y, w, h).unwrap())
        });
        let color = any::<[u8; 4]>().prop_map(Rgba);
        prop_oneof![
            (region.clone(), color.clone()).prop_map(|(r, c)| OverlayOp::fill_rect(r, c)),
            (region.clone(), any::<u8>())
                .prop_map(|(r, v)| OverlayOp::solid_patch(r, Rgba([v, v / 2, 255 - v, 255]))),
            (0.0f32..=1.0, color.clone()).prop_map(|(a, c)| OverlayOp::veil(a, c).unwrap()),
            (region, color).prop_map(|(r, c)| OverlayOp::label(r, "AB1", c)),
        ]
    }

    proptest! {
        #[test]
        fn composite_is_deterministic(seed in any::<u8>(), ops in prop::collection::vec(arb_op(9, 6), 0..6)) {
            let data: Vec<u8> = (0..9 * 6 * 4).map(|i| (i as u8).wrapping_mul(seed | 1)).collect();
            let f = Frame::new(7, 0, 9, 6, PixelFormat::Rgba8, data).unwrap();
            let plan = OverlayPlan::from_ordered_ops(7, ops);
            prop_assert_eq!(composite(&f, &plan).unwrap(), composite(&f, &plan).unwrap());
        }

        #[test]
        fn disjoint_z_plans_compose(lo in prop::collection::vec(arb_op(9, 6), 0..4),
                                    hi in prop::collection::vec(arb_op(9, 6), 0..4)) {
            let f = Frame::solid(7, 9, 6, Rgba::new(10, 200, 30, 255)).unwrap();
            let lo: Vec<_> = lo.into_iter().map(|op| op.with_z(z::PATCH)).collect();
            let hi: Vec<_> = hi.into_iter().map(|op| op.with_z(z::VEIL)).collect();
            let p1 = OverlayPlan::from_ordered_ops(7, lo.clone());
            let p2 = OverlayPlan::from_ordered_ops(7, hi.clone());
            let sequential = composite(&composite(&f, &p1).unwrap(), &p2).unwrap();
            let merged_ops: Vec<_> = hi.into_iter().chain(lo).collect();
            let merged = composite(&f, &OverlayPlan::from_ordered_ops(7, merged_ops)).unwrap();
            prop_assert_eq!(sequential, merged);
        }
    }
}

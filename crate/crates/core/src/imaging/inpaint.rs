//! Region fill: modal colour and fast-marching (Telea) inpainting.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::ImagingError;
use crate::types::{Frame, OverlayOp, Region, Rgba};

fn check_region(frame: &Frame, region: Region) -> Result<(), ImagingError> {
    if !region.fits_within(frame.width(), frame.height()) {
        return Err(ImagingError::RegionOutOfBounds {
            region,
            width: frame.width(),
            height: frame.height(),
        });
    }
    if region == frame.bounds() {
        return Err(ImagingError::Degenerate);
    }
    Ok(())
}

/// Most frequent colour among the pixels outside `region`; ties go to the
/// lowest packed `0xRRGGBBAA` value.
pub fn majority_color(frame: &Frame, region: Region) -> Result<Rgba, ImagingError> {
    check_region(frame, region)?;
    let mut hist: HashMap<u32, u32> = HashMap::new();
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            if !region.contains(x, y) {
                *hist.entry(frame.rgba_at(x, y).packed()).or_default() += 1;
            }
        }
    }
    let (color, _) = hist
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("at least one pixel lies outside the region");
    Ok(Rgba::from_packed(color))
}

/// Covers `region` with a flat patch of the frame's majority colour.
pub fn inpaint_majority(frame: &Frame, region: Region) -> Result<OverlayOp, ImagingError> {
    let color = majority_color(frame, region)?;
    Ok(OverlayOp::solid_patch(region, color))
}

/// Fast-marching inpainting of `region`, returned as a patch.
pub fn inpaint_fmm(frame: &Frame, region: Region, radius: u32) -> Result<OverlayOp, ImagingError> {
    check_region(frame, region)?;
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let mut mask = vec![false; w * h];
    for y in region.y..region.bottom() {
        for x in region.x..region.right() {
            mask[y as usize * w + x as usize] = true;
        }
    }
    let filled = inpaint_fmm_mask(frame, &mask, radius)?;
    let mut pixels = Vec::with_capacity(region.area() * 4);
    for y in region.y..region.bottom() {
        let start = (y as usize * w + region.x as usize) * 4;
        pixels.extend_from_slice(&filled[start..start + region.w as usize * 4]);
    }
    Ok(OverlayOp::patch(region, pixels).expect("patch sized from region"))
}

const KNOWN: u8 = 0;
const BAND: u8 = 1;
const INSIDE: u8 = 2;
const FAR: f64 = 1.0e6;

/// Fast-marching inpainting of every `mask` pixel (row-major, one flag per
/// pixel). Returns the whole frame as RGBA.
///
/// Unknown pixels are visited in increasing arrival time of a front
/// marching inward from the mask boundary. Each is set to a weighted mean
/// of the already-known pixels within `radius`, weighted by alignment with
/// the front normal, inverse squared distance and similarity of arrival
/// time. The mean carries no gradient extrapolation, so every output stays
/// within the range of the known values that fed it.
pub fn inpaint_fmm_mask(
    frame: &Frame,
    mask: &[bool],
    radius: u32,
) -> Result<Vec<u8>, ImagingError> {
    if radius < 1 {
        return Err(ImagingError::BadRadius);
    }
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    assert_eq!(mask.len(), w * h, "mask must cover the frame");
    let mut img = frame.to_rgba_vec();
    if !mask.contains(&false) {
        return Err(ImagingError::Degenerate);
    }
    if !mask.contains(&true) {
        return Ok(img);
    }

    let mut flags: Vec<u8> = mask
        .iter()
        .map(|&m| if m { INSIDE } else { KNOWN })
        .collect();
    let mut t: Vec<f64> = mask.iter().map(|&m| if m { FAR } else { 0.0 }).collect();
    let mut heap = BinaryHeap::new();

    let nbrs4 = |i: usize| {
        let (x, y) = (i % w, i / w);
        let mut out = [None; 4];
        if x > 0 {
            out[0] = Some(i - 1);
        }
        if x + 1 < w {
            out[1] = Some(i + 1);
        }
        if y > 0 {
            out[2] = Some(i - w);
        }
        if y + 1 < h {
            out[3] = Some(i + w);
        }
        out
    };

    for i in 0..w * h {
        if flags[i] == KNOWN && nbrs4(i).iter().flatten().any(|&n| flags[n] == INSIDE) {
            flags[i] = BAND;
            heap.push(Reverse((t[i].to_bits(), i)));
        }
    }

    let r2 = i64::from(radius) * i64::from(radius);
    let rad = radius as i64;

    while let Some(Reverse((_, i))) = heap.pop() {
        if flags[i] == KNOWN {
            continue;
        }
        flags[i] = KNOWN;
        for n in nbrs4(i).into_iter().flatten() {
            if flags[n] != INSIDE {
                continue;
            }
            let (nx, ny) = ((n % w) as i64, (n / w) as i64);
            let usable = |x: i64, y: i64| -> Option<f64> {
                (x >= 0 && y >= 0 && x < w as i64 && y < h as i64)
                    .then(|| x as usize + y as usize * w)
                    .filter(|&j| flags[j] != INSIDE)
                    .map(|j| t[j])
            };
            let solve = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) => {
                    if (a - b).abs() >= 1.0 {
                        1.0 + a.min(b)
                    } else {
                        (a + b + (2.0 - (a - b) * (a - b)).sqrt()) * 0.5
                    }
                }
                (Some(a), None) => 1.0 + a,
                (None, Some(b)) => 1.0 + b,
                (None, None) => FAR,
            };
            let (l, r) = (usable(nx - 1, ny), usable(nx + 1, ny));
            let (u, d) = (usable(nx, ny - 1), usable(nx, ny + 1));
            let tn = solve(u, l)
                .min(solve(d, l))
                .min(solve(u, r))
                .min(solve(d, r));
            t[n] = tn;

            // Front normal from arrival times of usable neighbours.
            let axis = |lo: Option<f64>, hi: Option<f64>| match (lo, hi) {
                (Some(lo), Some(hi)) => (hi - lo) * 0.5,
                (None, Some(hi)) => hi - tn,
                (Some(lo), None) => tn - lo,
                (None, None) => 0.0,
            };
            let (gx, gy) = (axis(l, r), axis(u, d));
            let gnorm = (gx * gx + gy * gy).sqrt();
            let (gx, gy) = if gnorm > 0.0 {
                (gx / gnorm, gy / gnorm)
            } else {
                (0.0, 0.0)
            };

            let mut acc = [0.0f64; 4];
            let mut wsum = 0.0;
            for ky in (ny - rad).max(0)..=(ny + rad).min(h as i64 - 1) {
                for kx in (nx - rad).max(0)..=(nx + rad).min(w as i64 - 1) {
                    let (rx, ry) = (nx - kx, ny - ky);
                    let len2 = rx * rx + ry * ry;
                    if len2 == 0 || len2 > r2 {
                        continue;
                    }
                    let j = ky as usize * w + kx as usize;
                    if flags[j] == INSIDE {
                        continue;
                    }
                    let len = (len2 as f64).sqrt();
                    let mut dir = (rx as f64 * gx + ry as f64 * gy) / len;
                    if dir.abs() <= 0.01 {
                        dir = 1.0e-6;
                    }
                    let dst = 1.0 / len2 as f64;
                    let lev = 1.0 / (1.0 + (t[j] - tn).abs());
                    let wt = (dir * dst * lev).abs();
                    for (c, a) in acc.iter_mut().enumerate() {
                        *a += wt * f64::from(img[j * 4 + c]);
                    }
                    wsum += wt;
                }
            }
            for (c, a) in acc.iter().enumerate() {
                img[n * 4 + c] = (a / wsum).round().clamp(0.0, 255.0) as u8;
            }
            flags[n] = BAND;
            heap.push(Reverse((tn.to_bits(), n)));
        }
    }
    Ok(img)
}

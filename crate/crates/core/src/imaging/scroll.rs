//! Vertical scroll displacement between two frames.

use rayon::prelude::*;

use super::ncc::{zncc_score, TemplateStats};
use super::{average_hash, hamming, to_gray, ImagingError};
use crate::types::{Frame, Region};

/// Strips whose matched segments differ by more than this many hash bits are
/// discarded.
pub const MAX_HASH_DISTANCE: u32 = 10;
/// Fewer agreeing strips than this and no scroll is reported.
pub const MIN_STRIPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrollParams {
    pub strip_height: u32,
    pub search_window: u32,
    pub min_score: f64,
}

impl Default for ScrollParams {
    fn default() -> Self {
        ScrollParams {
            strip_height: 32,
            search_window: 120,
            min_score: 0.85,
        }
    }
}

/// Best vertical offset found for one strip of the previous frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripMatch {
    pub y: u32,
    pub displacement: i32,
    pub score: f32,
    pub hash_distance: u32,
}

/// Signed vertical displacement from `prev` to `cur`; positive when the
/// content moved up (the user scrolled down the feed).
///
/// `None` when fewer than [`MIN_STRIPS`] strips match confidently or the
/// median displacement is zero.
pub fn detect_scroll(
    prev: &Frame,
    cur: &Frame,
    params: ScrollParams,
) -> Result<Option<i32>, ImagingError> {
    let kept: Vec<i32> = match_strips(prev, cur, params)?
        .into_iter()
        .filter(|m| f64::from(m.score) >= params.min_score && m.hash_distance <= MAX_HASH_DISTANCE)
        .map(|m| m.displacement)
        .collect();
    if kept.len() < MIN_STRIPS {
        return Ok(None);
    }
    let mut sorted = kept;
    sorted.sort_unstable();
    let median = sorted[(sorted.len() - 1) / 2];
    Ok((median != 0).then_some(median))
}

/// Per-strip best offsets, before any filtering.
///
/// The strip at `prev` rows `y..y+strip_height` is compared against `cur`
/// rows `y-d..y-d+strip_height` for every `d` in the search window that
/// keeps the window inside the frame. Equal scores go to the smallest `|d|`.
pub fn match_strips(
    prev: &Frame,
    cur: &Frame,
    params: ScrollParams,
) -> Result<Vec<StripMatch>, ImagingError> {
    if (prev.width(), prev.height()) != (cur.width(), cur.height()) {
        return Err(ImagingError::DimensionMismatch {
            a: (prev.width(), prev.height()),
            b: (cur.width(), cur.height()),
        });
    }
    if params.strip_height == 0 {
        return Err(ImagingError::BadConfig(
            "strip height must be positive".into(),
        ));
    }
    let (a, b) = (to_gray(prev), to_gray(cur));
    let (w, h, sh) = (a.width(), a.height(), params.strip_height);
    let win = i64::from(params.search_window);

    // Per-row sums of the current frame, prefix-accumulated.
    let mut row_sum = vec![0u64; h as usize + 1];
    let mut row_sq = vec![0u64; h as usize + 1];
    for y in 0..h as usize {
        let r = b.row(y as u32);
        row_sum[y + 1] = row_sum[y] + r.iter().map(|&v| u64::from(v)).sum::<u64>();
        row_sq[y + 1] = row_sq[y] + r.iter().map(|&v| u64::from(v) * u64::from(v)).sum::<u64>();
    }

    let starts: Vec<u32> = (0..h / sh).map(|i| i * sh).collect();
    let out = starts
        .par_iter()
        .map(|&y0| {
            let strip = a.crop(Region {
                x: 0,
                y: y0,
                w,
                h: sh,
            });
            let stats = TemplateStats::of(&strip);
            let mut best: Option<(f32, i64)> = None;
            let mut offsets: Vec<i64> = (-win..=win).collect();
            offsets.sort_by_key(|d| (d.abs(), *d));
            for d in offsets {
                let top = i64::from(y0) - d;
                if top < 0 || top + i64::from(sh) > i64::from(h) {
                    continue;
                }
                let top = top as usize;
                let mut cross = 0u64;
                for r in 0..sh as usize {
                    cross += dot(strip.row(r as u32), b.row((top + r) as u32));
                }
                let ws = row_sum[top + sh as usize] - row_sum[top];
                let wq = row_sq[top + sh as usize] - row_sq[top];
                let num_n = i128::from(stats.n) * i128::from(cross)
                    - i128::from(ws) * i128::from(stats.sum);
                let s = zncc_score(&stats, ws, wq, num_n as f64);
                if best.is_none_or(|(bs, _)| s > bs) {
                    best = Some((s, d));
                }
            }
            best.map(|(score, d)| {
                let top = (i64::from(y0) - d) as u32;
                let seg = b.crop(Region {
                    x: 0,
                    y: top,
                    w,
                    h: sh,
                });
                StripMatch {
                    y: y0,
                    displacement: d as i32,
                    score,
                    hash_distance: hamming(average_hash(&strip), average_hash(&seg)),
                }
            })
        })
        .collect::<Vec<_>>();
    Ok(out.into_iter().flatten().collect())
}

#[inline]
fn dot(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| u32::from(x) * u32::from(y))
        .map(u64::from)
        .sum()
}

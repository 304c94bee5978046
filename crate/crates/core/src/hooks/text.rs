//! Deterministic text detection and recognition against the bitmap font.

use std::sync::LazyLock;

use crate::corpus::atlas::{Glyph, GlyphAtlas, ADVANCE, GLYPH_H, GLYPH_W};
use crate::imaging::{components8, GrayImage, ImagingError};
use crate::types::Region;

pub const MIN_GLYPH_HEIGHT: u32 = 2;
pub const MAX_GLYPH_HEIGHT: u32 = 64;
pub const MAX_GLYPH_ASPECT: u32 = 4;
/// Fraction of the shorter height two boxes must share to sit on one line.
pub const LINE_OVERLAP: f64 = 0.6;
/// Cells scoring below this are emitted as `?`.
pub const MIN_GLYPH_SCORE: f64 = 0.8;

/// A recognised line of text.
#[derive(Debug, Clone, PartialEq)]
pub struct TextBox {
    pub region: Region,
    pub text: String,
    pub confidence: f64,
}

/// Otsu's threshold over a 256-bin histogram: the level `t` maximising the
/// between-class variance of `{v <= t}` and `{v > t}`. Ties go to the lowest
/// level.
pub fn otsu_threshold(hist: &[u64; 256]) -> u8 {
    let total: u64 = hist.iter().sum();
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &n)| v as f64 * n as f64)
        .sum();
    let (mut w0, mut sum0) = (0u64, 0f64);
    let (mut best, mut best_t) = (-1f64, 0u8);
    for t in 0..256 {
        w0 += hist[t];
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = sum0 / w0 as f64;
        let m1 = (sum_all - sum0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            best_t = t as u8;
        }
    }
    best_t
}

fn histogram(values: impl Iterator<Item = u8>) -> [u64; 256] {
    let mut h = [0u64; 256];
    for v in values {
        h[v as usize] += 1;
    }
    h
}

fn is_glyph_candidate(r: &Region) -> bool {
    (MIN_GLYPH_HEIGHT..=MAX_GLYPH_HEIGHT).contains(&r.h) && r.w <= MAX_GLYPH_ASPECT * r.h
}

fn vertical_overlap(a: &Region, b: &Region) -> f64 {
    let top = a.y.max(b.y);
    let bottom = a.bottom().min(b.bottom());
    if bottom <= top {
        return 0.0;
    }
    f64::from(bottom - top) / f64::from(a.h.min(b.h))
}

/// Finds text lines: glyph-sized connected components of either polarity
/// after a global Otsu split, merged left to right into lines.
pub fn detect_text_regions(gray: &GrayImage) -> Vec<Region> {
    let hist = histogram(gray.data().iter().copied());
    if hist.iter().filter(|&&n| n > 0).count() < 2 {
        return Vec::new();
    }
    let t = otsu_threshold(&hist);
    let data = gray.data();
    let (w, h) = (gray.width(), gray.height());
    let mut cands: Vec<Region> = components8(w, h, |i| data[i] <= t)
        .into_iter()
        .chain(components8(w, h, |i| data[i] > t))
        .map(|c| c.bbox)
        .filter(is_glyph_candidate)
        .collect();
    cands.sort_by_key(|r| (r.x, r.y));

    let mut lines: Vec<Region> = Vec::new();
    for c in cands {
        let joined = lines.iter_mut().find(|l| {
            let gap = i64::from(c.x) - i64::from(l.right());
            vertical_overlap(l, &c) >= LINE_OVERLAP && gap <= i64::from(l.h.max(c.h))
        });
        match joined {
            Some(l) => *l = l.union(&c),
            None => lines.push(c),
        }
    }
    lines.sort_by_key(|r| (r.y, r.x));
    lines
}

struct GlyphModel {
    glyph: Glyph,
    c0: u32,
    width: u32,
}

static GLYPHS: LazyLock<Vec<GlyphModel>> = LazyLock::new(|| {
    GlyphAtlas::new()
        .glyphs()
        .iter()
        .filter_map(|g| {
            let (c0, c1) = g.ink_columns()?;
            Some(GlyphModel {
                glyph: *g,
                c0,
                width: c1 - c0 + 1,
            })
        })
        .collect()
});

/// Zero-mean NCC of two equally sized binary patterns, mapped to `[0, 1]`.
/// Constant patterns score 0.5 when identical and 0 otherwise.
fn binary_ncc(a: &[bool], b: &[bool]) -> f64 {
    let n = a.len() as f64;
    let (mut sa, mut sb, mut sab) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        sa += f64::from(u8::from(x));
        sb += f64::from(u8::from(y));
        sab += f64::from(u8::from(x && y));
    }
    let va = n * sa - sa * sa;
    let vb = n * sb - sb * sb;
    if va <= 0.0 || vb <= 0.0 {
        return if sa == sb { 0.5 } else { 0.0 };
    }
    let c = (n * sab - sa * sb) / (va * vb).sqrt();
    ((c + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// Reads the text inside `line`.
///
/// Polarity comes from a 2-pixel ring around the region: its majority side of
/// a local Otsu split is background. Cells are runs of inked columns; each is
/// compared to every glyph whose ink width, at the line's pixel scale, equals
/// the cell width.
pub fn recognize_text(gray: &GrayImage, line: Region) -> Result<TextBox, ImagingError> {
    let (iw, ih) = (gray.width(), gray.height());
    if !line.fits_within(iw, ih) || line.w == 0 || line.h == 0 {
        return Err(ImagingError::RegionOutOfBounds {
            region: line,
            width: iw,
            height: ih,
        });
    }
    let empty = TextBox {
        region: line,
        text: String::new(),
        confidence: 0.0,
    };

    let pad = 2;
    let ox = line.x.saturating_sub(pad);
    let oy = line.y.saturating_sub(pad);
    let outer = Region {
        x: ox,
        y: oy,
        w: (line.right() + pad).min(iw) - ox,
        h: (line.bottom() + pad).min(ih) - oy,
    };
    let outer_px = || {
        (outer.y..outer.bottom()).flat_map(move |y| (outer.x..outer.right()).map(move |x| (x, y)))
    };
    let hist = histogram(outer_px().map(|(x, y)| gray.get(x, y)));
    if hist.iter().filter(|&&n| n > 0).count() < 2 {
        return Ok(empty);
    }
    let t = otsu_threshold(&hist);
    let (mut ring_dark, mut ring_total) = (0usize, 0usize);
    for (x, y) in outer_px().filter(|&(x, y)| !line.contains(x, y)) {
        ring_total += 1;
        ring_dark += usize::from(gray.get(x, y) <= t);
    }
    let dark_bg = if ring_total > 0 {
        2 * ring_dark > ring_total
    } else {
        let dark: u64 = hist[..=t as usize].iter().sum();
        2 * dark > (line.w * line.h) as u64
    };

    let (w, h) = (line.w as usize, line.h as usize);
    let ink: Vec<bool> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| (gray.get(line.x + x as u32, line.y + y as u32) <= t) != dark_bg)
        .collect();
    let col_ink: Vec<bool> = (0..w).map(|x| (0..h).any(|y| ink[y * w + x])).collect();
    let Some(top) = (0..h).find(|&y| ink[y * w..(y + 1) * w].contains(&true)) else {
        return Ok(empty);
    };
    let bottom = (0..h)
        .rev()
        .find(|&y| ink[y * w..(y + 1) * w].contains(&true))
        .unwrap_or(top);
    let s = (((bottom - top + 1) as f64 / f64::from(GLYPH_H)).round() as usize).max(1);

    // Column runs; runs separated by less than one font pixel are merged.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut x = 0;
    while x < w {
        if !col_ink[x] {
            x += 1;
            continue;
        }
        let start = x;
        while x < w && col_ink[x] {
            x += 1;
        }
        match runs.last_mut() {
            Some(last) if start - last.1 < s => last.1 = x,
            _ => runs.push((start, x)),
        }
    }

    let cell_w = GLYPH_W as usize * s;
    let cell_h = GLYPH_H as usize * s;
    let mut text = String::new();
    let mut score_sum = 0.0;
    let mut prev_left: Option<i64> = None;
    let mut pattern = vec![false; cell_w * cell_h];
    let mut expected = vec![false; cell_w * cell_h];
    for &(a, b) in &runs {
        let mut best: Option<(f64, char, u32)> = None;
        for m in GLYPHS.iter().filter(|m| m.width as usize * s == b - a) {
            let left = a as i64 - i64::from(m.c0) * s as i64;
            for py in 0..cell_h {
                for px in 0..cell_w {
                    let (lx, ly) = (left + px as i64, top + py);
                    pattern[py * cell_w + px] =
                        (a as i64..b as i64).contains(&lx) && ly < h && ink[ly * w + lx as usize];
                    expected[py * cell_w + px] = m.glyph.ink((px / s) as u32, (py / s) as u32);
                }
            }
            let score = binary_ncc(&pattern, &expected);
            if best.is_none_or(|(bs, _, _)| score > bs) {
                best = Some((score, m.glyph.ch, m.c0));
            }
        }
        let (ch, score, c0) = match best {
            Some((sc, ch, c0)) if sc >= MIN_GLYPH_SCORE => (ch, sc, c0),
            _ => ('?', 0.0, 0),
        };
        let left = a as i64 - i64::from(c0) * s as i64;
        if let Some(p) = prev_left {
            let advance = (ADVANCE as usize * s) as f64;
            let spaces = ((left - p) as f64 / advance).round() as i64 - 1;
            for _ in 0..spaces.max(0) {
                text.push(' ');
            }
        }
        prev_left = Some(left);
        text.push(ch);
        score_sum += score;
    }
    if runs.is_empty() {
        return Ok(empty);
    }
    Ok(TextBox {
        region: line,
        text,
        confidence: score_sum / runs.len() as f64,
    })
}

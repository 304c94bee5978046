//! Themes and the plantable UI elements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::atlas::{GlyphAtlas, GLYPH_H};
use super::canvas::Canvas;
use crate::imaging::scaled_dim;
use crate::types::Rgba;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theme {
    /// Microblog app: white page, blue story rings.
    Light,
    /// Professional-network app: warm off-white page, rust story rings.
    Warm,
    /// The microblog rendered inside a mobile browser.
    Browser,
}

impl Theme {
    pub const ALL: [Theme; 3] = [Theme::Light, Theme::Warm, Theme::Browser];

    pub fn name(self) -> &'static str {
        match self {
            Theme::Light => "light",
            Theme::Warm => "warm",
            Theme::Browser => "browser",
        }
    }

    pub fn parse(s: &str) -> Option<Theme> {
        Theme::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn palette(self) -> Palette {
        match self {
            Theme::Light | Theme::Browser => Palette {
                page: Rgba::opaque(255, 255, 255),
                text: Rgba::opaque(15, 20, 25),
                muted: Rgba::opaque(170, 170, 170),
                icon: Rgba::opaque(83, 100, 113),
                ring: Rgba::opaque(20, 110, 200),
                divider: Rgba::opaque(236, 238, 240),
                bar: Rgba::opaque(255, 255, 255),
            },
            Theme::Warm => Palette {
                page: Rgba::opaque(243, 242, 239),
                text: Rgba::opaque(30, 30, 30),
                muted: Rgba::opaque(170, 168, 165),
                icon: Rgba::opaque(83, 100, 113),
                ring: Rgba::opaque(180, 60, 20),
                divider: Rgba::opaque(224, 223, 220),
                bar: Rgba::opaque(243, 242, 239),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Palette {
    pub page: Rgba,
    pub text: Rgba,
    /// Secondary text, e.g. engagement counts.
    pub muted: Rgba,
    pub icon: Rgba,
    pub ring: Rgba,
    pub divider: Rgba,
    pub bar: Rgba,
}

pub const BADGE_RED: Rgba = Rgba::opaque(224, 36, 94);

/// Light fills for avatars. All are brighter than the contour level and
/// none falls in the skin-tone range used by the media detector.
pub const PASTELS: [Rgba; 6] = [
    Rgba::opaque(180, 200, 240),
    Rgba::opaque(200, 230, 190),
    Rgba::opaque(240, 200, 230),
    Rgba::opaque(250, 220, 150),
    Rgba::opaque(190, 225, 235),
    Rgba::opaque(225, 205, 250),
];

/// Skin-like patch colours.
pub const SKIN_TONES: [Rgba; 4] = [
    Rgba::opaque(232, 176, 140),
    Rgba::opaque(214, 160, 128),
    Rgba::opaque(245, 185, 150),
    Rgba::opaque(224, 168, 132),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    StoriesBar,
    MetricsBar,
    Badge,
    TextLine,
    ImageBlock,
    ColorPatch,
    Avatar,
}

impl ElementKind {
    pub const ALL: [ElementKind; 7] = [
        ElementKind::StoriesBar,
        ElementKind::MetricsBar,
        ElementKind::Badge,
        ElementKind::TextLine,
        ElementKind::ImageBlock,
        ElementKind::ColorPatch,
        ElementKind::Avatar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::StoriesBar => "stories_bar",
            ElementKind::MetricsBar => "metrics_bar",
            ElementKind::Badge => "badge",
            ElementKind::TextLine => "text",
            ElementKind::ImageBlock => "image",
            ElementKind::ColorPatch => "patch",
            ElementKind::Avatar => "avatar",
        }
    }

    pub fn parse(s: &str) -> Option<ElementKind> {
        ElementKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Content an occluding intervention must never cover.
    pub fn is_protected(self) -> bool {
        matches!(
            self,
            ElementKind::TextLine | ElementKind::ImageBlock | ElementKind::ColorPatch
        )
    }
}

pub const STORY_COUNT: usize = 5;
const STORY_PITCH: u32 = 48;
const STORY_MARGIN: u32 = 4;
pub const STORIES_SIZE: (u32, u32) = (
    2 * STORY_MARGIN + STORY_COUNT as u32 * STORY_PITCH,
    2 * STORY_MARGIN + STORY_PITCH,
);
pub const METRICS_SIZE: (u32, u32) = (200, 16);
pub const BADGE_SIZE: (u32, u32) = (25, 25);
pub const AVATAR_SIZE: (u32, u32) = (32, 32);
const TILE: u32 = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Row of circular story thumbnails.
    StoriesBar {
        scale: f64,
        avatars: [Rgba; STORY_COUNT],
    },
    /// Reply / repost / like icons with their counts.
    MetricsBar {
        scale: f64,
        counts: [u32; 3],
    },
    /// Red notification disc with a digit.
    Badge {
        scale: f64,
        count: u8,
    },
    TextLine {
        text: String,
        scale: u32,
        color: Rgba,
    },
    /// Dark photo-like mosaic with an optional white caption.
    ImageBlock {
        width: u32,
        height: u32,
        seed: u64,
        caption: Option<String>,
    },
    ColorPatch {
        width: u32,
        height: u32,
        color: Rgba,
    },
    Avatar {
        fill: Rgba,
    },
}

impl Element {
    pub fn kind(&self) -> ElementKind {
        match self {
            Element::StoriesBar { .. } => ElementKind::StoriesBar,
            Element::MetricsBar { .. } => ElementKind::MetricsBar,
            Element::Badge { .. } => ElementKind::Badge,
            Element::TextLine { .. } => ElementKind::TextLine,
            Element::ImageBlock { .. } => ElementKind::ImageBlock,
            Element::ColorPatch { .. } => ElementKind::ColorPatch,
            Element::Avatar { .. } => ElementKind::Avatar,
        }
    }

    /// Canonical size of the scalable elements at scale 1.
    pub fn base_size(kind: ElementKind) -> Option<(u32, u32)> {
        match kind {
            ElementKind::StoriesBar => Some(STORIES_SIZE),
            ElementKind::MetricsBar => Some(METRICS_SIZE),
            ElementKind::Badge => Some(BADGE_SIZE),
            _ => None,
        }
    }

    pub fn size(&self) -> (u32, u32) {
        let scaled = |(w, h): (u32, u32), s: f64| (scaled_dim(w, s), scaled_dim(h, s));
        match self {
            Element::StoriesBar { scale, .. } => scaled(STORIES_SIZE, *scale),
            Element::MetricsBar { scale, .. } => scaled(METRICS_SIZE, *scale),
            Element::Badge { scale, .. } => scaled(BADGE_SIZE, *scale),
            Element::TextLine { text, scale, .. } => GlyphAtlas::text_size(text, *scale),
            Element::ImageBlock { width, height, .. }
            | Element::ColorPatch { width, height, .. } => (*width, *height),
            Element::Avatar { .. } => AVATAR_SIZE,
        }
    }

    /// Text drawn inside the element, if any.
    pub fn transcript(&self) -> Option<&str> {
        match self {
            Element::TextLine { text, .. } => Some(text),
            Element::ImageBlock { caption, .. } => caption.as_deref(),
            _ => None,
        }
    }

    /// Renders the element onto `canvas` at `(x, y)` using `pal`.
    pub fn draw(&self, canvas: &mut Canvas, x: i64, y: i64, pal: &Palette, atlas: &GlyphAtlas) {
        match self {
            Element::StoriesBar { scale, avatars } => {
                canvas.blit(x, y, &stories_canonical(pal, avatars).resized(*scale));
            }
            Element::MetricsBar { scale, counts } => {
                canvas.blit(x, y, &metrics_canonical(pal, counts, atlas).resized(*scale));
            }
            Element::Badge { scale, count } => {
                canvas.blit(x, y, &badge_canonical(pal, *count, atlas).resized(*scale));
            }
            Element::TextLine { text, scale, color } => {
                canvas.text(atlas, x, y, text, *scale, *color)
            }
            Element::ImageBlock {
                width,
                height,
                seed,
                caption,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                for ty in (0..*height).step_by(TILE as usize) {
                    for tx in (0..*width).step_by(TILE as usize) {
                        let c = Rgba::opaque(
                            rng.random_range(20..110),
                            rng.random_range(20..110),
                            rng.random_range(20..110),
                        );
                        let (tw, th) = (TILE.min(width - tx), TILE.min(height - ty));
                        canvas.fill_rect(x + i64::from(tx), y + i64::from(ty), tw, th, c);
                    }
                }
                if let Some(text) = caption {
                    let (cx, cy) = caption_origin(*width, *height, text);
                    canvas.text(
                        atlas,
                        x + i64::from(cx),
                        y + i64::from(cy),
                        text,
                        CAPTION_SCALE,
                        Rgba::WHITE,
                    );
                }
            }
            Element::ColorPatch {
                width,
                height,
                color,
            } => canvas.fill_rect(x, y, *width, *height, *color),
            Element::Avatar { fill } => {
                let c = 16.0;
                canvas.ring(x as f64 + c, y as f64 + c, 13.0, 16.0, pal.text);
                canvas.disc(x as f64 + c, y as f64 + c, 13.0, *fill);
            }
        }
    }

    /// Ink bounding box of the element's text, relative to its origin.
    pub fn text_bounds(&self, atlas: &GlyphAtlas) -> Option<(u32, u32, u32, u32)> {
        match self {
            Element::TextLine { text, scale, .. } => atlas.ink_bounds(text, *scale),
            Element::ImageBlock {
                width,
                height,
                caption: Some(text),
                ..
            } => {
                let (cx, cy) = caption_origin(*width, *height, text);
                atlas
                    .ink_bounds(text, CAPTION_SCALE)
                    .map(|(x, y, w, h)| (x + cx, y + cy, w, h))
            }
            _ => None,
        }
    }

    /// Characteristic colours, recorded in the ground truth.
    pub fn colors(&self, pal: &Palette) -> Vec<Rgba> {
        match self {
            Element::StoriesBar { avatars, .. } => {
                let mut v = vec![pal.ring];
                v.extend_from_slice(avatars);
                v
            }
            Element::MetricsBar { .. } => vec![pal.icon, pal.muted],
            Element::Badge { .. } => vec![BADGE_RED, Rgba::WHITE],
            Element::TextLine { color, .. } => vec![*color],
            Element::ImageBlock { .. } => vec![Rgba::WHITE],
            Element::ColorPatch { color, .. } => vec![*color],
            Element::Avatar { fill } => vec![pal.text, *fill],
        }
    }
}

pub const CAPTION_SCALE: u32 = 2;

fn caption_origin(width: u32, height: u32, text: &str) -> (u32, u32) {
    let (tw, th) = GlyphAtlas::text_size(text, CAPTION_SCALE);
    (width.saturating_sub(tw) / 2, height.saturating_sub(th + 10))
}

fn stories_canonical(pal: &Palette, avatars: &[Rgba; STORY_COUNT]) -> Canvas {
    let (w, h) = STORIES_SIZE;
    let mut c = Canvas::new(w, h, pal.page);
    for (i, fill) in avatars.iter().enumerate() {
        let cx = f64::from(STORY_MARGIN + i as u32 * STORY_PITCH) + f64::from(STORY_PITCH) / 2.0;
        let cy = f64::from(STORY_MARGIN) + f64::from(STORY_PITCH) / 2.0;
        c.ring(cx, cy, 17.0, 20.0, pal.ring);
        c.disc(cx, cy, 15.0, *fill);
    }
    c
}

fn metrics_canonical(pal: &Palette, counts: &[u32; 3], atlas: &GlyphAtlas) -> Canvas {
    let (w, h) = METRICS_SIZE;
    let mut c = Canvas::new(w, h, pal.page);
    for (i, &n) in counts.iter().enumerate() {
        let x0 = 4 + 66 * i as i64;
        match i {
            // speech bubble
            0 => {
                c.ring(x0 as f64 + 6.0, 8.0, 3.5, 6.0, pal.icon);
                c.fill_rect(x0 + 1, 11, 3, 3, pal.icon);
            }
            // repost arrows
            1 => {
                c.fill_rect(x0, 4, 12, 2, pal.icon);
                c.fill_rect(x0 + 10, 2, 2, 6, pal.icon);
                c.fill_rect(x0, 10, 12, 2, pal.icon);
                c.fill_rect(x0, 8, 2, 6, pal.icon);
            }
            // heart
            _ => {
                c.disc(x0 as f64 + 3.5, 6.0, 3.5, pal.icon);
                c.disc(x0 as f64 + 8.5, 6.0, 3.5, pal.icon);
                for r in 0..6 {
                    c.fill_rect(x0 + r, 7 + r, 12 - 2 * r as u32, 1, pal.icon);
                }
            }
        }
        let y = (h - GLYPH_H) as i64 / 2;
        c.text(atlas, x0 + 18, y, &format_count(n), 1, pal.muted);
    }
    c
}

fn badge_canonical(pal: &Palette, count: u8, atlas: &GlyphAtlas) -> Canvas {
    let (w, h) = BADGE_SIZE;
    let mut c = Canvas::new(w, h, pal.page);
    c.disc(f64::from(w) / 2.0, f64::from(h) / 2.0, 11.5, BADGE_RED);
    let digit = char::from(b'0' + count % 10).to_string();
    c.text(atlas, 8, 6, &digit, 2, Rgba::WHITE);
    c
}

/// Compact engagement count: 7, 48, 1K, 12K.
pub fn format_count(n: u32) -> String {
    if n >= 1000 {
        format!("{}K", n / 1000)
    } else {
        n.to_string()
    }
}

/// The scalable element rendered at scale 1 with default content, as cut
/// out of a screenshot: the mask an intervention author would supply.
pub fn canonical_mask(kind: ElementKind, theme: Theme) -> Option<Canvas> {
    let pal = theme.palette();
    let atlas = GlyphAtlas::new();
    match kind {
        ElementKind::StoriesBar => Some(stories_canonical(&pal, &[PASTELS[0]; STORY_COUNT])),
        ElementKind::MetricsBar => Some(metrics_canonical(&pal, &[12, 48, 300], &atlas)),
        ElementKind::Badge => Some(badge_canonical(&pal, 3, &atlas)),
        _ => None,
    }
}

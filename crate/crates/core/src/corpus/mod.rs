//! Deterministic synthetic app screens with ground truth.
//!
//! A [`ScreenSpec`] lists planted elements at explicit positions;
//! [`generate_screen`] renders it. [`ScreenSpec::random`] builds plausible
//! feeds, settings pages and video stills from a seed.

pub mod atlas;
pub mod canvas;
pub mod elements;
mod text;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use atlas::GlyphAtlas;
pub use canvas::Canvas;
pub use elements::{
    canonical_mask, format_count, Element, ElementKind, Palette, Theme, PASTELS, SKIN_TONES,
};
pub use text::{random_line, random_word, FLAG_WORDS};

use crate::imaging::default_scale_ladder;
use crate::types::{Frame, Region, Rgba};

pub const DEFAULT_WIDTH: u32 = 360;
pub const DEFAULT_HEIGHT: u32 = 640;

/// Scales at which bars and badges are planted: the points of the default
/// matching ladder that fall inside `[0.8, 1.5]`.
pub fn plant_scales() -> Vec<f64> {
    default_scale_ladder()
        .into_iter()
        .filter(|s| (0.8..=1.5).contains(s))
        .collect()
}

const BROWSER_BAR: u32 = 40;
const APP_BAR: u32 = 44;
const SIDE: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("element {index} ({kind}) at {rect:?} leaves the {width}x{height} screen")]
    OutOfBounds {
        index: usize,
        kind: &'static str,
        rect: Region,
        width: u32,
        height: u32,
    },
    #[error("elements {a} and {b} overlap")]
    Overlap { a: usize, b: usize },
    #[error("element {0} has zero size")]
    Empty(usize),
    #[error("shift {shift} is not smaller than the screen height {height}")]
    ShiftTooLarge { shift: i32, height: u32 },
    #[error("invalid screen dimensions {0}x{1}")]
    BadDimensions(u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    Feed,
    Stories,
    Settings,
    VideoStill,
    Mixed,
}

impl Layout {
    pub const ALL: [Layout; 5] = [
        Layout::Feed,
        Layout::Stories,
        Layout::Settings,
        Layout::VideoStill,
        Layout::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Layout::Feed => "feed",
            Layout::Stories => "stories",
            Layout::Settings => "settings",
            Layout::VideoStill => "video_still",
            Layout::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Layout> {
        Layout::ALL.into_iter().find(|l| l.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub x: u32,
    pub y: u32,
    pub element: Element,
}

impl Planted {
    pub fn new(x: u32, y: u32, element: Element) -> Self {
        Planted { x, y, element }
    }

    pub fn rect(&self) -> Region {
        let (w, h) = self.element.size();
        Region {
            x: self.x,
            y: self.y,
            w,
            h,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenSpec {
    pub seed: u64,
    pub layout: Layout,
    pub theme: Theme,
    pub width: u32,
    pub height: u32,
    /// Draw the top chrome (browser bar for [`Theme::Browser`], app-bar rule).
    pub app_bar: bool,
    /// Rows holding one-pixel divider rules.
    pub rules: Vec<u32>,
    pub elements: Vec<Planted>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthEntry {
    pub kind: ElementKind,
    pub rect: Region,
    pub transcript: Option<String>,
    /// Ink bounding box of the transcript, in screen coordinates.
    pub text_rect: Option<Region>,
    pub colors: Vec<Rgba>,
    /// Planting scale for bars and badges, 1 otherwise.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub entries: Vec<TruthEntry>,
}

impl GroundTruth {
    pub fn of_kind(&self, kind: ElementKind) -> impl Iterator<Item = &TruthEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }

    /// Regions no occluding intervention may touch.
    pub fn protected(&self) -> impl Iterator<Item = Region> + '_ {
        self.entries
            .iter()
            .filter(|e| e.kind.is_protected())
            .map(|e| e.rect)
    }

    /// Lines of text with their ink boxes, top to bottom.
    pub fn text_lines(&self) -> Vec<(Region, &str)> {
        let mut v: Vec<(Region, &str)> = self
            .entries
            .iter()
            .filter_map(|e| Some((e.text_rect?, e.transcript.as_deref()?)))
            .collect();
        v.sort_by_key(|(r, _)| (r.y, r.x));
        v
    }

    /// Line-oriented sidecar: `kind x y w h scale=.. colors=.. text=".."`.
    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let r = e.rect;
            let _ = write!(
                out,
                "{} {} {} {} {} scale={:.4}",
                e.kind.name(),
                r.x,
                r.y,
                r.w,
                r.h,
                e.scale
            );
            let colors: Vec<String> = e
                .colors
                .iter()
                .map(|c| format!("{:08x}", c.packed()))
                .collect();
            let _ = write!(out, " colors={}", colors.join(","));
            if let Some(t) = e.text_rect {
                let _ = write!(out, " text_rect={},{},{},{}", t.x, t.y, t.w, t.h);
            }
            if let Some(t) = &e.transcript {
                let _ = write!(out, " text=\"{t}\"");
            }
            out.push('\n');
        }
        out
    }
}

impl ScreenSpec {
    pub fn blank(seed: u64, layout: Layout, theme: Theme, width: u32, height: u32) -> Self {
        ScreenSpec {
            seed,
            layout,
            theme,
            width,
            height,
            app_bar: false,
            rules: Vec::new(),
            elements: Vec::new(),
        }
    }

    pub fn with(mut self, x: u32, y: u32, element: Element) -> Self {
        self.elements.push(Planted::new(x, y, element));
        self
    }

    /// Drops every element of the listed kinds.
    pub fn without(mut self, kinds: &[ElementKind]) -> Self {
        self.elements.retain(|p| !kinds.contains(&p.element.kind()));
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.width == 0 || self.height == 0 {
            return Err(CorpusError::BadDimensions(self.width, self.height));
        }
        let rects: Vec<Region> = self.elements.iter().map(Planted::rect).collect();
        for (i, r) in rects.iter().enumerate() {
            if r.w == 0 || r.h == 0 {
                return Err(CorpusError::Empty(i));
            }
            if !r.fits_within(self.width, self.height) {
                return Err(CorpusError::OutOfBounds {
                    index: i,
                    kind: self.elements[i].element.kind().name(),
                    rect: *r,
                    width: self.width,
                    height: self.height,
                });
            }
            for (j, s) in rects.iter().enumerate().skip(i + 1) {
                if r.intersects(s) {
                    return Err(CorpusError::Overlap { a: i, b: j });
                }
            }
        }
        Ok(())
    }

    /// A random screen of the given layout at the default portrait size.
    pub fn random(seed: u64, layout: Layout, theme: Theme) -> Self {
        Self::random_sized(seed, layout, theme, DEFAULT_WIDTH, DEFAULT_HEIGHT)
    }

    pub fn random_sized(seed: u64, layout: Layout, theme: Theme, width: u32, height: u32) -> Self {
        let mut b = Builder::new(seed, layout, theme, width, height);
        b.app_bar();
        match layout {
            Layout::Feed | Layout::Stories | Layout::Mixed => {
                let stories = match layout {
                    Layout::Feed => b.rng.random_bool(0.5),
                    _ => true,
                };
                if stories {
                    b.stories_bar();
                }
                while b.post() {}
            }
            Layout::Settings => while b.setting_row() {},
            Layout::VideoStill => b.video_still(),
        }
        b.finish()
    }

    /// A tall, chrome-free feed for scrolling through.
    fn scroll_canvas(&self, height: u32) -> ScreenSpec {
        let mut b = Builder::new(self.seed, self.layout, self.theme, self.width, height);
        b.spec.app_bar = false;
        b.y = 8;
        b.chrome_free = true;
        while b.post() {}
        b.finish()
    }
}

struct Builder {
    spec: ScreenSpec,
    rng: ChaCha8Rng,
    y: u32,
    chrome_free: bool,
}

impl Builder {
    fn new(seed: u64, layout: Layout, theme: Theme, width: u32, height: u32) -> Self {
        Builder {
            spec: ScreenSpec::blank(seed, layout, theme, width, height),
            rng: ChaCha8Rng::seed_from_u64(seed),
            y: 0,
            chrome_free: false,
        }
    }

    fn pal(&self) -> Palette {
        self.spec.theme.palette()
    }

    fn scale(&mut self) -> f64 {
        let scales = plant_scales();
        scales[self.rng.random_range(0..scales.len())]
    }

    fn push(&mut self, x: u32, y: u32, element: Element) {
        self.spec.elements.push(Planted::new(x, y, element));
    }

    fn fits(&self, bottom: u32) -> bool {
        bottom + 4 <= self.spec.height
    }

    fn text_line(&mut self, x: u32, y: u32, scale: u32, max_chars: usize) {
        let text = random_line(&mut self.rng, max_chars);
        let color = self.pal().text;
        self.push(x, y, Element::TextLine { text, scale, color });
    }

    fn app_bar(&mut self) {
        self.spec.app_bar = true;
        let top = if self.spec.theme == Theme::Browser {
            BROWSER_BAR
        } else {
            0
        };
        let title = match self.spec.layout {
            Layout::Feed | Layout::Mixed => "HOME",
            Layout::Stories => "FOR YOU",
            Layout::Settings => "SETTINGS",
            Layout::VideoStill => "WATCH",
        };
        let color = self.pal().text;
        self.push(
            SIDE,
            top + 11,
            Element::TextLine {
                text: title.into(),
                scale: 3,
                color,
            },
        );
        let badge = matches!(
            self.spec.layout,
            Layout::Feed | Layout::Mixed | Layout::Stories
        ) && self.rng.random_bool(0.5);
        if badge {
            let el = Element::Badge {
                scale: self.scale(),
                count: self.rng.random_range(1..10),
            };
            let (w, h) = el.size();
            self.push(self.spec.width - SIDE - w, top + (APP_BAR - h) / 2, el);
        }
        self.y = top + APP_BAR + 8;
    }

    fn stories_bar(&mut self) {
        let mut avatars = [PASTELS[0]; elements::STORY_COUNT];
        for a in avatars.iter_mut() {
            *a = PASTELS[self.rng.random_range(0..PASTELS.len())];
        }
        let el = Element::StoriesBar {
            scale: self.scale(),
            avatars,
        };
        let (w, h) = el.size();
        let x = self.rng.random_range(0..=(self.spec.width - w) / 2);
        self.push(x, self.y, el);
        self.y += h + 8;
        self.rule();
    }

    fn rule(&mut self) {
        self.spec.rules.push(self.y);
        self.y += 9;
    }

    /// One post: avatar, name, body, optional media, metrics. Returns false
    /// (and plants nothing) when it would not fit.
    fn post(&mut self) -> bool {
        let mark = (self.spec.elements.len(), self.rng.clone(), self.y);
        let w = self.spec.width;
        let top = self.y;
        let fill = PASTELS[self.rng.random_range(0..PASTELS.len())];
        self.push(SIDE, top, Element::Avatar { fill });
        let name_chars = ((w - 84 - SIDE) / 12) as usize;
        self.text_line(84, top + 9, 2, name_chars.min(14));
        if !self.chrome_free && self.spec.layout == Layout::Mixed && self.rng.random_bool(0.3) {
            let el = Element::Badge {
                scale: self.scale(),
                count: self.rng.random_range(1..10),
            };
            let (bw, bh) = el.size();
            if bh <= 32 {
                self.push(w - SIDE - bw, top + (32 - bh) / 2, el);
            }
        }
        self.y = top + 32 + 8;
        let lines = self.rng.random_range(1..=3);
        for _ in 0..lines {
            self.text_line(SIDE, self.y, 2, ((w - 2 * SIDE) / 12) as usize);
            self.y += 20;
        }
        self.y += 4;
        let media_p = match self.spec.layout {
            Layout::Mixed => 0.45,
            _ => 0.3,
        };
        if self.rng.random_bool(media_p) {
            let h = self.rng.random_range(80..140);
            let caption = self
                .rng
                .random_bool(0.5)
                .then(|| {
                    random_line(&mut self.rng, ((w - 2 * SIDE - 16) / 12) as usize)
                        .chars()
                        .take(26)
                        .collect::<String>()
                })
                .map(|s| s.trim_end().to_string());
            let seed = self.rng.random();
            self.push(
                SIDE,
                self.y,
                Element::ImageBlock {
                    width: w - 2 * SIDE,
                    height: h,
                    seed,
                    caption,
                },
            );
            self.y += h + 8;
        }
        let patch_p = match self.spec.layout {
            Layout::Mixed => 0.4,
            _ => 0.1,
        };
        if self.rng.random_bool(patch_p) {
            let (pw, ph) = (
                self.rng.random_range(40..120),
                self.rng.random_range(30..80),
            );
            let color = SKIN_TONES[self.rng.random_range(0..SKIN_TONES.len())];
            let x = self.rng.random_range(SIDE..w - SIDE - pw);
            self.push(
                x,
                self.y,
                Element::ColorPatch {
                    width: pw,
                    height: ph,
                    color,
                },
            );
            self.y += ph + 8;
        }
        if self.rng.random_bool(0.9) {
            let counts = [
                self.rng.random_range(0..400),
                self.rng.random_range(0..3000),
                self.rng.random_range(0..20000),
            ];
            let el = Element::MetricsBar {
                scale: self.scale(),
                counts,
            };
            let h = el.size().1;
            self.push(SIDE, self.y, el);
            self.y += h + 6;
        }
        if !self.fits(self.y) {
            self.spec.elements.truncate(mark.0);
            self.rng = mark.1;
            self.y = mark.2;
            return false;
        }
        self.rule();
        true
    }

    fn setting_row(&mut self) -> bool {
        let y = self.y;
        if !self.fits(y + 14) {
            return false;
        }
        let words = self.rng.random_range(1..=2);
        let label: Vec<String> = (0..words).map(|_| random_word(&mut self.rng, 8)).collect();
        let color = self.pal().text;
        self.push(
            SIDE,
            y,
            Element::TextLine {
                text: label.join(" "),
                scale: 2,
                color,
            },
        );
        let state = if self.rng.random_bool(0.5) {
            "ON"
        } else {
            "OFF"
        };
        let muted = self.pal().icon;
        let el = Element::TextLine {
            text: state.into(),
            scale: 2,
            color: muted,
        };
        let sw = el.size().0;
        self.push(self.spec.width - SIDE - sw, y, el);
        self.y = y + 14 + 12;
        self.rule();
        true
    }

    fn video_still(&mut self) {
        let w = self.spec.width;
        let h = self.rng.random_range(180..240);
        let caption = self.rng.random_bool(0.6).then(|| {
            random_line(&mut self.rng, 24)
                .chars()
                .take(24)
                .collect::<String>()
                .trim_end()
                .to_string()
        });
        let seed = self.rng.random();
        self.push(
            0,
            self.y,
            Element::ImageBlock {
                width: w,
                height: h,
                seed,
                caption,
            },
        );
        self.y += h + 10;
        self.text_line(SIDE, self.y, 3, ((w - 2 * SIDE) / 18) as usize);
        self.y += 21 + 8;
        for _ in 0..self.rng.random_range(1..=3) {
            self.text_line(SIDE, self.y, 2, ((w - 2 * SIDE) / 12) as usize);
            self.y += 20;
        }
        self.y += 4;
        if self.rng.random_bool(0.3) {
            let (pw, ph) = (
                self.rng.random_range(40..120),
                self.rng.random_range(30..80),
            );
            let color = SKIN_TONES[self.rng.random_range(0..SKIN_TONES.len())];
            self.push(
                SIDE,
                self.y,
                Element::ColorPatch {
                    width: pw,
                    height: ph,
                    color,
                },
            );
            self.y += ph + 8;
        }
        self.rule();
        while self.post() {}
    }

    fn finish(self) -> ScreenSpec {
        self.spec
    }
}

/// Renders `spec`. The frame has id 0 and timestamp 0.
pub fn generate_screen(spec: &ScreenSpec) -> Result<(Frame, GroundTruth), CorpusError> {
    let canvas = render(spec)?;
    Ok((canvas.to_frame(0, 0), truth_of(spec)))
}

pub fn render(spec: &ScreenSpec) -> Result<Canvas, CorpusError> {
    spec.validate()?;
    let pal = spec.theme.palette();
    let atlas = GlyphAtlas::new();
    let mut c = Canvas::new(spec.width, spec.height, pal.page);
    if spec.app_bar {
        let mut top = 0;
        if spec.theme == Theme::Browser {
            c.fill_rect(0, 0, spec.width, BROWSER_BAR, Rgba::opaque(222, 222, 222));
            c.fill_rect(8, 8, spec.width.saturating_sub(56), 24, Rgba::WHITE);
            c.ring(
                f64::from(spec.width) - 24.0,
                20.0,
                5.0,
                7.0,
                Rgba::opaque(90, 90, 90),
            );
            top = BROWSER_BAR;
        }
        c.fill_rect(0, i64::from(top), spec.width, APP_BAR, pal.bar);
        c.fill_rect(0, i64::from(top + APP_BAR), spec.width, 1, pal.divider);
    }
    for &y in &spec.rules {
        c.fill_rect(0, i64::from(y), spec.width, 1, pal.divider);
    }
    for p in &spec.elements {
        p.element
            .draw(&mut c, i64::from(p.x), i64::from(p.y), &pal, &atlas);
    }
    Ok(c)
}

fn truth_of(spec: &ScreenSpec) -> GroundTruth {
    let pal = spec.theme.palette();
    let atlas = GlyphAtlas::new();
    let entries = spec
        .elements
        .iter()
        .map(|p| {
            let scale = match p.element {
                Element::StoriesBar { scale, .. }
                | Element::MetricsBar { scale, .. }
                | Element::Badge { scale, .. } => scale,
                _ => 1.0,
            };
            TruthEntry {
                kind: p.element.kind(),
                rect: p.rect(),
                transcript: p.element.transcript().map(str::to_string),
                text_rect: p.element.text_bounds(&atlas).map(|(x, y, w, h)| Region {
                    x: p.x + x,
                    y: p.y + y,
                    w,
                    h,
                }),
                colors: p.element.colors(&pal),
                scale,
            }
        })
        .collect();
    GroundTruth { entries }
}

/// Frames of a scroll through the feed behind `spec`: frame `i + 1` is
/// frame `i` moved up by `shifts[i]` pixels (down when negative), with the
/// uncovered rows filled by further feed content. The feed is regenerated
/// from the seed, theme and layout of `spec` without fixed chrome, so every
/// pair differs by a pure translation.
pub fn generate_scroll_sequence(
    spec: &ScreenSpec,
    shifts: &[i32],
) -> Result<Vec<Frame>, CorpusError> {
    for &s in shifts {
        if s.unsigned_abs() >= spec.height {
            return Err(CorpusError::ShiftTooLarge {
                shift: s,
                height: spec.height,
            });
        }
    }
    let mut offsets = vec![0i64];
    for &s in shifts {
        offsets.push(offsets.last().copied().unwrap_or(0) + i64::from(s));
    }
    let lo = *offsets.iter().min().expect("at least one offset");
    let hi = *offsets.iter().max().expect("at least one offset");
    let tall_h = spec.height + (hi - lo) as u32;
    let canvas = render(&spec.scroll_canvas(tall_h))?;
    Ok(offsets
        .iter()
        .enumerate()
        .map(|(i, &o)| {
            let top = (o - lo) as u32;
            canvas
                .crop(0, top, spec.width, spec.height)
                .to_frame(i as u64, i as u64 * 50_000)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plant_scales_are_ladder_points() {
        let s = plant_scales();
        assert_eq!(s.len(), 7);
        assert!(
            (s[0] - 0.805255).abs() < 1e-6 && (s[6] - 1.426558).abs() < 1e-6,
            "{s:?}"
        );
    }

    #[test]
    fn random_specs_are_valid_and_deterministic() {
        for seed in 0..40 {
            for layout in Layout::ALL {
                for theme in Theme::ALL {
                    let spec = ScreenSpec::random(seed, layout, theme);
                    spec.validate()
                        .unwrap_or_else(|e| panic!("{seed} {layout:?} {theme:?}: {e}"));
                    assert_eq!(spec, ScreenSpec::random(seed, layout, theme));
                }
            }
        }
    }

    #[test]
    fn same_screen_same_pixels() {
        let spec = ScreenSpec::random(7, Layout::Mixed, Theme::Light);
        let (a, ta) = generate_screen(&spec).unwrap();
        let (b, tb) = generate_screen(&spec).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(ta, tb);
    }

    #[test]
    fn one_stories_bar_entry_covers_its_circles() {
        let spec = ScreenSpec::blank(1, Layout::Stories, Theme::Light, 360, 200).with(
            30,
            40,
            Element::StoriesBar {
                scale: 1.0,
                avatars: [PASTELS[1]; 5],
            },
        );
        let (f, gt) = generate_screen(&spec).unwrap();
        let bars: Vec<_> = gt.of_kind(ElementKind::StoriesBar).collect();
        assert_eq!(bars.len(), 1);
        let ring = spec.theme.palette().ring;
        for y in 0..f.height() {
            for x in 0..f.width() {
                if f.rgba_at(x, y) == ring {
                    assert!(bars[0].rect.contains(x, y));
                }
            }
        }
    }

    #[test]
    fn overlapping_elements_are_rejected() {
        let line = || Element::TextLine {
            text: "HI".into(),
            scale: 2,
            color: Rgba::BLACK,
        };
        let spec = ScreenSpec::blank(1, Layout::Feed, Theme::Light, 100, 100)
            .with(10, 10, line())
            .with(15, 12, line());
        assert_eq!(
            generate_screen(&spec).unwrap_err(),
            CorpusError::Overlap { a: 0, b: 1 }
        );
        let spec = ScreenSpec::blank(1, Layout::Feed, Theme::Light, 100, 100).with(95, 10, line());
        assert!(matches!(
            generate_screen(&spec),
            Err(CorpusError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn scroll_sequence_is_a_translation() {
        let spec = ScreenSpec::random(3, Layout::Feed, Theme::Warm);
        assert_eq!(generate_scroll_sequence(&spec, &[]).unwrap().len(), 1);
        let frames = generate_scroll_sequence(&spec, &[37, -20]).unwrap();
        let (a, b, c) = (&frames[0], &frames[1], &frames[2]);
        for y in 0..spec.height - 37 {
            for x in 0..spec.width {
                assert_eq!(a.rgba_at(x, y + 37), b.rgba_at(x, y));
            }
        }
        for y in 0..spec.height - 20 {
            for x in (0..spec.width).step_by(7) {
                assert_eq!(b.rgba_at(x, y), c.rgba_at(x, y + 20));
            }
        }
        assert!(generate_scroll_sequence(&spec, &[640]).is_err());
    }

    #[test]
    fn sidecar_lists_every_element() {
        let spec = ScreenSpec::random(11, Layout::VideoStill, Theme::Browser);
        let (_, gt) = generate_screen(&spec).unwrap();
        let side = gt.to_sidecar();
        assert_eq!(side.lines().count(), spec.elements.len());
        assert!(side.lines().next().unwrap().starts_with("text "));
    }
}

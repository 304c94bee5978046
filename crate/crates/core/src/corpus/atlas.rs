//! Fixed 5x7 bitmap font used to render and recognise text.
//!
//! Letters and digits span the full 5x7 cell. Narrow punctuation is pushed
//! against the right edge of its cell so word gaps stay uniform. Within every
//! glyph the inked columns are contiguous, which lets recognition segment
//! lines on empty columns alone.

pub const GLYPH_W: u32 = 5;
pub const GLYPH_H: u32 = 7;
/// Horizontal advance per character, in font units.
pub const ADVANCE: u32 = 6;

const GLYPHS: &[(char, [&str; 7])] = &[
    (
        'A',
        [
            ".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#",
        ],
    ),
    (
        'B',
        [
            "####.", "#...#", "#...#", "####.", "#...#", "#...#", "####.",
        ],
    ),
    (
        'C',
        [
            ".###.", "#...#", "#....", "#....", "#....", "#...#", ".###.",
        ],
    ),
    (
        'D',
        [
            "####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####.",
        ],
    ),
    (
        'E',
        [
            "#####", "#....", "#....", "####.", "#....", "#....", "#####",
        ],
    ),
    (
        'F',
        [
            "#####", "#....", "#....", "####.", "#....", "#....", "#....",
        ],
    ),
    (
        'G',
        [
            ".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###.",
        ],
    ),
    (
        'H',
        [
            "#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#",
        ],
    ),
    (
        'I',
        [
            "#####", "..#..", "..#..", "..#..", "..#..", "..#..", "#####",
        ],
    ),
    (
        'J',
        [
            "#####", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##..",
        ],
    ),
    (
        'K',
        [
            "#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#",
        ],
    ),
    (
        'L',
        [
            "#....", "#....", "#....", "#....", "#....", "#....", "#####",
        ],
    ),
    (
        'M',
        [
            "#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#",
        ],
    ),
    (
        'N',
        [
            "#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#",
        ],
    ),
    (
        'O',
        [
            ".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###.",
        ],
    ),
    (
        'P',
        [
            "####.", "#...#", "#...#", "####.", "#....", "#....", "#....",
        ],
    ),
    (
        'Q',
        [
            ".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#",
        ],
    ),
    (
        'R',
        [
            "####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#",
        ],
    ),
    (
        'S',
        [
            ".####", "#....", "#....", ".###.", "....#", "....#", "####.",
        ],
    ),
    (
        'T',
        [
            "#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#..",
        ],
    ),
    (
        'U',
        [
            "#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###.",
        ],
    ),
    (
        'V',
        [
            "#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#..",
        ],
    ),
    (
        'W',
        [
            "#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#.",
        ],
    ),
    (
        'X',
        [
            "#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#",
        ],
    ),
    (
        'Y',
        [
            "#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#..",
        ],
    ),
    (
        'Z',
        [
            "#####", "....#", "...#.", "..#..", ".#...", "#....", "#####",
        ],
    ),
    (
        '0',
        [
            ".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###.",
        ],
    ),
    (
        '1',
        [
            "..#..", ".##..", "#.#..", "..#..", "..#..", "..#..", "#####",
        ],
    ),
    (
        '2',
        [
            ".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####",
        ],
    ),
    (
        '3',
        [
            "#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###.",
        ],
    ),
    (
        '4',
        [
            "...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#.",
        ],
    ),
    (
        '5',
        [
            "#####", "#....", "####.", "....#", "....#", "#...#", ".###.",
        ],
    ),
    (
        '6',
        [
            "..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###.",
        ],
    ),
    (
        '7',
        [
            "#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#...",
        ],
    ),
    (
        '8',
        [
            ".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###.",
        ],
    ),
    (
        '9',
        [
            ".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##..",
        ],
    ),
    (
        ' ',
        [
            ".....", ".....", ".....", ".....", ".....", ".....", ".....",
        ],
    ),
    (
        '.',
        [
            ".....", ".....", ".....", ".....", ".....", "...##", "...##",
        ],
    ),
    (
        ',',
        [
            ".....", ".....", ".....", ".....", "...##", "...##", "....#",
        ],
    ),
    (
        '!',
        [
            "....#", "....#", "....#", "....#", "....#", ".....", "....#",
        ],
    ),
    (
        '?',
        [
            ".###.", "#...#", "....#", "...#.", "..#..", ".....", "..#..",
        ],
    ),
    (
        '-',
        [
            ".....", ".....", ".....", ".####", ".....", ".....", ".....",
        ],
    ),
    (
        ':',
        [
            ".....", "...##", "...##", ".....", "...##", "...##", ".....",
        ],
    ),
    (
        '\'',
        [
            "....#", "....#", ".....", ".....", ".....", ".....", ".....",
        ],
    ),
    (
        '/',
        [
            "....#", "....#", "...#.", "..#..", ".#...", "#....", "#....",
        ],
    ),
    (
        '%',
        [
            "##..#", "##..#", "...#.", "..#..", ".#...", "#..##", "#..##",
        ],
    ),
    (
        '+',
        [
            ".....", "..#..", "..#..", "#####", "..#..", "..#..", ".....",
        ],
    ),
];

/// A single 5x7 glyph bitmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Glyph {
    pub ch: char,
    rows: [u8; 7],
}

impl Glyph {
    /// Whether font cell `(col, row)` is inked.
    pub fn ink(&self, col: u32, row: u32) -> bool {
        col < GLYPH_W && row < GLYPH_H && self.rows[row as usize] & (1 << (GLYPH_W - 1 - col)) != 0
    }

    /// Inclusive range of inked columns, `None` for blank glyphs.
    pub fn ink_columns(&self) -> Option<(u32, u32)> {
        let cols: Vec<u32> = (0..GLYPH_W)
            .filter(|&c| (0..GLYPH_H).any(|r| self.ink(c, r)))
            .collect();
        Some((*cols.first()?, *cols.last()?))
    }

    pub fn is_blank(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }
}

/// The in-repo bitmap font.
#[derive(Debug, Clone)]
pub struct GlyphAtlas {
    glyphs: Vec<Glyph>,
}

impl Default for GlyphAtlas {
    fn default() -> Self {
        Self::new()
    }
}

impl GlyphAtlas {
    pub fn new() -> Self {
        let glyphs = GLYPHS
            .iter()
            .map(|(ch, rows)| {
                let mut bits = [0u8; 7];
                for (r, row) in rows.iter().enumerate() {
                    for (c, b) in row.bytes().enumerate() {
                        if b == b'#' {
                            bits[r] |= 1 << (GLYPH_W as usize - 1 - c);
                        }
                    }
                }
                Glyph {
                    ch: *ch,
                    rows: bits,
                }
            })
            .collect();
        GlyphAtlas { glyphs }
    }

    pub fn glyphs(&self) -> &[Glyph] {
        &self.glyphs
    }

    /// Looks up a glyph; lowercase letters map to their uppercase form.
    pub fn get(&self, ch: char) -> Option<&Glyph> {
        let ch = ch.to_ascii_uppercase();
        self.glyphs.iter().find(|g| g.ch == ch)
    }

    pub fn supports(&self, text: &str) -> bool {
        text.chars().all(|c| self.get(c).is_some())
    }

    /// Pixel size of `text` rendered at integer `scale`: `(width, height)`.
    pub fn text_size(text: &str, scale: u32) -> (u32, u32) {
        let n = text.chars().count() as u32;
        if n == 0 {
            return (0, 0);
        }
        ((n * ADVANCE - (ADVANCE - GLYPH_W)) * scale, GLYPH_H * scale)
    }

    /// Calls `plot(x, y)` for every inked pixel of `text` rendered with its
    /// top-left corner at the origin. Unsupported characters render as `?`.
    pub fn rasterize(&self, text: &str, scale: u32, mut plot: impl FnMut(u32, u32)) {
        let fallback = self.get('?').copied();
        for (i, ch) in text.chars().enumerate() {
            let Some(glyph) = self.get(ch).copied().or(fallback) else {
                continue;
            };
            let x0 = i as u32 * ADVANCE * scale;
            for row in 0..GLYPH_H {
                for col in 0..GLYPH_W {
                    if glyph.ink(col, row) {
                        for dy in 0..scale {
                            for dx in 0..scale {
                                plot(x0 + col * scale + dx, row * scale + dy);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Tight bounding box `(x, y, w, h)` of the inked pixels of `text`,
    /// relative to the render origin.
    pub fn ink_bounds(&self, text: &str, scale: u32) -> Option<(u32, u32, u32, u32)> {
        let mut bounds: Option<(u32, u32, u32, u32)> = None;
        self.rasterize(text, scale, |x, y| {
            bounds = Some(match bounds {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        });
        bounds.map(|(x0, y0, x1, y1)| (x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }
}

//! Boundary maps and Suzuki-Abe border following.

use super::GrayImage;

/// Marks the boundary pixels of the foreground (`pixel > threshold`).
///
/// A foreground pixel is on the boundary when one of its 4-neighbours inside
/// the image is background. Pixels beyond the image edge do not count, so a
/// crop of a larger scene has the same boundary as the scene itself.
/// Boundary pixels are 255, everything else 0.
pub fn contourize(img: &GrayImage, threshold: u8) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let fg = |x: u32, y: u32| img.get(x, y) > threshold;
    GrayImage::from_fn(w, h, |x, y| {
        if !fg(x, y) {
            return 0;
        }
        let edge = (x > 0 && !fg(x - 1, y))
            || (x + 1 < w && !fg(x + 1, y))
            || (y > 0 && !fg(x, y - 1))
            || (y + 1 < h && !fg(x, y + 1));
        if edge {
            255
        } else {
            0
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourKind {
    Outer,
    Hole,
}

/// A closed border polyline. Consecutive points (and last to first) are
/// 8-neighbours. Outer borders run clockwise on screen (y down), holes
/// counter-clockwise. A lone pixel yields a single-point contour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub kind: ContourKind,
    pub points: Vec<(u32, u32)>,
    /// Index of the enclosing border in the same set.
    pub parent: Option<usize>,
}

impl Contour {
    /// Shoelace area in screen coordinates; positive means clockwise.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut acc = 0i64;
        for i in 0..n {
            let (x0, y0) = self.points[i];
            let (x1, y1) = self.points[(i + 1) % n];
            acc += i64::from(x0) * i64::from(y1) - i64::from(x1) * i64::from(y0);
        }
        acc as f64 / 2.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContourSet {
    pub contours: Vec<Contour>,
}

impl ContourSet {
    pub fn outer_count(&self) -> usize {
        self.contours
            .iter()
            .filter(|c| c.kind == ContourKind::Outer)
            .count()
    }

    pub fn hole_count(&self) -> usize {
        self.contours
            .iter()
            .filter(|c| c.kind == ContourKind::Hole)
            .count()
    }
}

/// Neighbour offsets, clockwise on screen starting east.
const DIRS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn dir_of(from: (i32, i32), to: (i32, i32)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    DIRS.iter()
        .position(|&o| o == d)
        .expect("points are 8-neighbours")
}

/// Traces every border of a binary image (nonzero = foreground).
///
/// Foreground is 8-connected and background 4-connected: each foreground
/// component yields one outer border and each enclosed background component
/// one hole border.
pub fn trace_contours(binary: &GrayImage) -> ContourSet {
    let (w, h) = (binary.width() as i32, binary.height() as i32);
    let pw = (w + 2) as usize;
    // Labels on a zero-padded copy; the padding plays the role of the frame.
    let mut f = vec![0i32; pw * (h + 2) as usize];
    for y in 0..h {
        for x in 0..w {
            if binary.get(x as u32, y as u32) != 0 {
                f[(y + 1) as usize * pw + (x + 1) as usize] = 1;
            }
        }
    }
    let at = |f: &Vec<i32>, p: (i32, i32)| f[p.1 as usize * pw + p.0 as usize];

    let mut contours: Vec<Contour> = Vec::new();
    // border number -> (kind, index into `contours`); NBD 1 is the frame.
    let mut borders: Vec<(ContourKind, Option<usize>)> = vec![(ContourKind::Hole, None)];
    let mut nbd = 1i32;

    for y in 1..=h {
        let mut lnbd = 1i32;
        for x in 1..=w {
            let v = at(&f, (x, y));
            let start = (x, y);
            let (kind, from) = if v == 1 && at(&f, (x - 1, y)) == 0 {
                (ContourKind::Outer, (x - 1, y))
            } else if v >= 1 && at(&f, (x + 1, y)) == 0 {
                if v > 1 {
                    lnbd = v;
                }
                (ContourKind::Hole, (x + 1, y))
            } else {
                if v != 0 && v != 1 {
                    lnbd = v.abs();
                }
                continue;
            };

            nbd += 1;
            let (prev_kind, prev_idx) = borders[(lnbd - 1) as usize];
            let parent = if prev_kind == kind {
                prev_idx.and_then(|i| contours[i].parent)
            } else {
                prev_idx
            };

            let mut points = Vec::new();
            // Clockwise search around the start for the first foreground pixel.
            let d0 = dir_of(start, from);
            let first = (0..8)
                .map(|k| DIRS[(d0 + k) % 8])
                .map(|(dx, dy)| (x + dx, y + dy))
                .find(|&p| at(&f, p) != 0);
            match first {
                None => {
                    f[y as usize * pw + x as usize] = -nbd;
                    points.push(start);
                }
                Some(p1) => {
                    let mut p2 = p1;
                    let mut p3 = start;
                    loop {
                        // Counter-clockwise search around p3, starting just
                        // after p2.
                        let d2 = dir_of(p3, p2);
                        let mut east_zero = false;
                        let mut p4 = p2;
                        for k in 1..=8 {
                            let (dx, dy) = DIRS[(d2 + 8 - k) % 8];
                            let q = (p3.0 + dx, p3.1 + dy);
                            if at(&f, q) != 0 {
                                p4 = q;
                                break;
                            }
                            if (dx, dy) == (1, 0) {
                                east_zero = true;
                            }
                        }
                        let idx = p3.1 as usize * pw + p3.0 as usize;
                        if east_zero {
                            f[idx] = -nbd;
                        } else if f[idx] == 1 {
                            f[idx] = nbd;
                        }
                        points.push(p3);
                        if p4 == start && p3 == p1 {
                            break;
                        }
                        p2 = p3;
                        p3 = p4;
                    }
                }
            }

            // The trace runs counter-clockwise for outer borders; flip it so
            // outer borders read clockwise and holes counter-clockwise,
            // keeping the start point first.
            points[1..].reverse();
            let points = points
                .into_iter()
                .map(|(px, py)| ((px - 1) as u32, (py - 1) as u32))
                .collect();
            borders.push((kind, Some(contours.len())));
            contours.push(Contour {
                kind,
                points,
                parent,
            });

            let v = at(&f, (x, y));
            if v != 1 {
                lnbd = v.abs();
            }
        }
    }
    ContourSet { contours }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(size: u32, x0: u32, y0: u32, side: u32) -> GrayImage {
        GrayImage::from_fn(size, size, |x, y| {
            if x >= x0 && x < x0 + side && y >= y0 && y < y0 + side {
                255
            } else {
                0
            }
        })
    }

    /// Boundary by erosion difference: foreground minus its erosion with a
    /// cross-shaped element, where out-of-image neighbours are ignored.
    fn erosion_boundary(img: &GrayImage, t: u8) -> GrayImage {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let fg = |x: i64, y: i64| img.get(x as u32, y as u32) > t;
        GrayImage::from_fn(w as u32, h as u32, |x, y| {
            let (x, y) = (i64::from(x), i64::from(y));
            let eroded = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .map(|(dx, dy)| (x + dx, y + dy))
                .filter(|&(nx, ny)| nx >= 0 && ny >= 0 && nx < w && ny < h)
                .all(|(nx, ny)| fg(nx, ny));
            if fg(x, y) && !eroded {
                255
            } else {
                0
            }
        })
    }

    #[test]
    fn contourize_blank_is_blank() {
        let img = GrayImage::filled(9, 9, 0);
        assert!(contourize(&img, 128).data().iter().all(|&v| v == 0));
    }

    #[test]
    fn contourize_square_perimeter() {
        let img = square(20, 5, 5, 10);
        let edges = contourize(&img, 128);
        assert_eq!(edges.data().iter().filter(|&&v| v == 255).count(), 36);
    }

    #[test]
    fn contourize_matches_erosion_oracle_on_circles() {
        // A row of filled discs like a stories bar.
        let img = GrayImage::from_fn(120, 30, |x, y| {
            let cx = (x / 24) * 24 + 12;
            let d2 = (x as i64 - cx as i64).pow(2) + (y as i64 - 15).pow(2);
            if d2 <= 100 {
                200
            } else {
                20
            }
        });
        assert_eq!(contourize(&img, 128), erosion_boundary(&img, 128));
    }

    #[test]
    fn empty_image_has_no_contours() {
        assert!(trace_contours(&GrayImage::filled(8, 8, 0))
            .contours
            .is_empty());
    }

    #[test]
    fn filled_square_has_one_outer() {
        let set = trace_contours(&square(16, 3, 4, 6));
        assert_eq!(set.outer_count(), 1);
        assert_eq!(set.hole_count(), 0);
        let c = &set.contours[0];
        assert_eq!(c.points[0], (3, 4));
        assert_eq!(c.points.len(), 20);
        assert!(c.signed_area() > 0.0, "outer border must run clockwise");
    }

    #[test]
    fn ring_has_outer_and_hole() {
        let img = GrayImage::from_fn(30, 30, |x, y| {
            let outer = (5..25).contains(&x) && (5..25).contains(&y);
            let inner = (10..20).contains(&x) && (10..20).contains(&y);
            if outer && !inner {
                255
            } else {
                0
            }
        });
        let set = trace_contours(&img);
        assert_eq!(set.outer_count(), 1);
        assert_eq!(set.hole_count(), 1);
        let hole = set
            .contours
            .iter()
            .find(|c| c.kind == ContourKind::Hole)
            .unwrap();
        assert!(
            hole.signed_area() < 0.0,
            "hole border must run counter-clockwise"
        );
        assert_eq!(hole.parent, Some(0));
        assert_eq!(set.contours[0].parent, None);
    }

    #[test]
    fn single_pixel_and_pair() {
        let mut img = GrayImage::filled(6, 6, 0);
        img.set(1, 1, 255);
        img.set(3, 4, 255);
        img.set(4, 4, 255);
        let set = trace_contours(&img);
        assert_eq!(set.outer_count(), 2);
        assert_eq!(set.contours[0].points, vec![(1, 1)]);
        assert_eq!(set.contours[1].points, vec![(3, 4), (4, 4)]);
    }

    #[test]
    fn consecutive_points_are_neighbours() {
        let img = GrayImage::from_fn(20, 20, |x, y| if (x * 7 + y * 3) % 5 < 2 { 255 } else { 0 });
        for c in trace_contours(&img).contours {
            let n = c.points.len();
            for i in 0..n {
                let (a, b) = (c.points[i], c.points[(i + 1) % n]);
                assert!(
                    a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1,
                    "{a:?} -> {b:?}"
                );
            }
        }
    }

    /// Flood-fill oracle: 8-connected foreground components and 4-connected
    /// background components that do not touch the border.
    pub(crate) fn component_oracle(img: &GrayImage) -> (usize, usize) {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let mut seen = vec![false; (w * h) as usize];
        let (mut comps, mut holes) = (0, 0);
        for sy in 0..h {
            for sx in 0..w {
                let si = (sy * w + sx) as usize;
                if seen[si] {
                    continue;
                }
                let fg = img.get(sx as u32, sy as u32) != 0;
                let nbrs: &[(i64, i64)] = if fg {
                    &[
                        (1, 0),
                        (-1, 0),
                        (0, 1),
                        (0, -1),
                        (1, 1),
                        (1, -1),
                        (-1, 1),
                        (-1, -1),
                    ]
                } else {
                    &[(1, 0), (-1, 0), (0, 1), (0, -1)]
                };
                let mut stack = vec![(sx, sy)];
                seen[si] = true;
                let mut touches = false;
                while let Some((x, y)) = stack.pop() {
                    if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                        touches = true;
                    }
                    for (dx, dy) in nbrs {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w || ny >= h {
                            continue;
                        }
                        let ni = (ny * w + nx) as usize;
                        if !seen[ni] && (img.get(nx as u32, ny as u32) != 0) == fg {
                            seen[ni] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
                if fg {
                    comps += 1;
                } else if !touches {
                    holes += 1;
                }
            }
        }
        (comps, holes)
    }

    proptest! {
        #[test]
        fn outer_count_matches_flood_fill(w in 1u32..=32, h in 1u32..=32, bits in prop::collection::vec(any::<bool>(), 1024)) {
            let img = GrayImage::from_fn(w, h, |x, y| if bits[(y * 32 + x) as usize] { 255 } else { 0 });
            let set = trace_contours(&img);
            let (comps, holes) = component_oracle(&img);
            prop_assert_eq!(set.outer_count(), comps);
            prop_assert_eq!(set.hole_count(), holes);
        }
    }
}

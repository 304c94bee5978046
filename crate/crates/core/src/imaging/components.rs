//! 8-connected component labelling.

use crate::types::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub bbox: Region,
    pub area: u32,
}

/// Bounding boxes of the 8-connected components of the pixels for which
/// `fg(index)` holds, in raster order of their first pixel.
pub fn components8(width: u32, height: u32, fg: impl Fn(usize) -> bool) -> Vec<Component> {
    let (w, h) = (width as usize, height as usize);
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if seen[start] || !fg(start) {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut area = 0u32;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            area += 1;
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if !seen[j] && fg(j) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(Component {
            bbox: Region {
                x: x0 as u32,
                y: y0 as u32,
                w: (x1 - x0 + 1) as u32,
                h: (y1 - y0 + 1) as u32,
            },
            area,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_join() {
        // x . .
        // . x .
        // . . . x
        let on = [0usize, 5, 11];
        let c = components8(4, 3, |i| on.contains(&i));
        assert_eq!(c.len(), 2);
        assert_eq!(
            c[0].bbox,
            Region {
                x: 0,
                y: 0,
                w: 2,
                h: 2
            }
        );
        assert_eq!(c[0].area, 2);
        assert_eq!(
            c[1].bbox,
            Region {
                x: 3,
                y: 2,
                w: 1,
                h: 1
            }
        );
    }

    #[test]
    fn empty_input() {
        assert!(components8(5, 5, |_| false).is_empty());
    }
}

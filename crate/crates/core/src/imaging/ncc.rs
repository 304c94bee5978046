use super::{GrayImage, ImagingError, Integral};

/// Match scores in `[0, 1]` for every valid top-left placement of a template.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    width: u32,
    height: u32,
    scores: Vec<f32>,
}

impl ScoreMap {
    pub(crate) fn new(width: u32, height: u32, scores: Vec<f32>) -> Self {
        debug_assert_eq!(scores.len(), width as usize * height as usize);
        ScoreMap {
            width,
            height,
            scores,
        }
    }

    /// Number of horizontal placements.
    pub fn width(&self) -> u32 {
        self.width
    }

    /// Number of vertical placements.
    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.scores[y as usize * self.width as usize + x as usize]
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    /// Highest-scoring placement; the first in raster order wins ties.
    pub fn argmax(&self) -> (u32, u32, f32) {
        let mut best = (0usize, f32::NEG_INFINITY);
        for (i, &s) in self.scores.iter().enumerate() {
            if s > best.1 {
                best = (i, s);
            }
        }
        let w = self.width as usize;
        ((best.0 % w) as u32, (best.0 / w) as u32, best.1)
    }
}

/// Template statistics needed by every scoring path.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TemplateStats {
    pub n: u64,
    pub sum: u64,
    /// `n * sum(t^2) - sum(t)^2`, i.e. `n^2` times the variance.
    pub var_n: u128,
}

impl TemplateStats {
    pub fn of(t: &GrayImage) -> Self {
        let n = t.data().len() as u64;
        let sum: u64 = t.data().iter().map(|&v| u64::from(v)).sum();
        let sq: u64 = t.data().iter().map(|&v| u64::from(v) * u64::from(v)).sum();
        TemplateStats {
            n,
            sum,
            var_n: u128::from(n) * u128::from(sq) - u128::from(sum) * u128::from(sum),
        }
    }
}

/// Zero-normalised cross-correlation mapped from `[-1, 1]` to `[0, 1]`.
///
/// `num_n` is `n * sum(I*T) - sum(I) * sum(T)` over the window. When either
/// side has zero variance the score is 0.5 if the means agree within one
/// gray level and 0 otherwise.
#[inline]
pub(crate) fn zncc_score(tpl: &TemplateStats, win_sum: u64, win_sq: u64, num_n: f64) -> f32 {
    let win_var_n =
        u128::from(tpl.n) * u128::from(win_sq) - u128::from(win_sum) * u128::from(win_sum);
    if win_var_n == 0 || tpl.var_n == 0 {
        return if win_sum.abs_diff(tpl.sum) <= tpl.n {
            0.5
        } else {
            0.0
        };
    }
    let den = (win_var_n as f64).sqrt() * (tpl.var_n as f64).sqrt();
    let c = (num_n / den).clamp(-1.0, 1.0);
    ((c + 1.0) * 0.5) as f32
}

/// Exhaustive zero-normalised cross-correlation of `template` over `image`.
///
/// All sums are exact integers; only the final normalisation is floating
/// point. This is the reference scorer; the multi-scale matcher computes the
/// same map through FFT correlation.
pub fn ncc_match(image: &GrayImage, template: &GrayImage) -> Result<ScoreMap, ImagingError> {
    let (iw, ih, tw, th) = (
        image.width(),
        image.height(),
        template.width(),
        template.height(),
    );
    if tw > iw || th > ih || tw == 0 || th == 0 {
        return Err(ImagingError::TemplateTooLarge { tw, th, iw, ih });
    }
    let stats = TemplateStats::of(template);
    let ii = Integral::new(image);
    let (mw, mh) = (iw - tw + 1, ih - th + 1);
    let mut scores = Vec::with_capacity(mw as usize * mh as usize);
    let img = image.data();
    let tpl = template.data();
    let (iw, tw, th) = (iw as usize, tw as usize, th as usize);
    for y in 0..mh as usize {
        for x in 0..mw as usize {
            let (ws, wq) = ii.window(x, y, tw, th);
            let mut cross = 0u64;
            for ty in 0..th {
                let irow = &img[(y + ty) * iw + x..(y + ty) * iw + x + tw];
                let trow = &tpl[ty * tw..(ty + 1) * tw];
                cross += irow
                    .iter()
                    .zip(trow)
                    .map(|(&a, &b)| u64::from(a) * u64::from(b))
                    .sum::<u64>();
            }
            let num_n =
                i128::from(stats.n) * i128::from(cross) - i128::from(ws) * i128::from(stats.sum);
            scores.push(zncc_score(&stats, ws, wq, num_n as f64));
        }
    }
    Ok(ScoreMap::new(mw, mh, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: u32, h: u32, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.random())
    }

    #[test]
    fn template_equal_to_image_scores_one() {
        let img = noise(9, 6, 1);
        let map = ncc_match(&img, &img).unwrap();
        assert_eq!((map.width(), map.height()), (1, 1));
        assert!((map.get(0, 0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_window_scores_zero() {
        let img = noise(12, 12, 2);
        let neg = GrayImage::from_fn(5, 4, |x, y| 255 - img.get(x + 3, y + 6));
        let map = ncc_match(&img, &neg).unwrap();
        assert!(map.get(3, 6).abs() < 1e-6);
    }

    #[test]
    fn template_larger_than_image_is_an_error() {
        let img = GrayImage::filled(4, 4, 0);
        let tpl = GrayImage::filled(5, 2, 0);
        assert!(matches!(
            ncc_match(&img, &tpl),
            Err(ImagingError::TemplateTooLarge { .. })
        ));
    }

    #[test]
    fn flat_windows_follow_the_mean_rule() {
        let img = GrayImage::filled(6, 6, 100);
        let same = GrayImage::filled(2, 2, 101);
        let far = GrayImage::filled(2, 2, 140);
        let textured = GrayImage::new(2, 2, vec![0, 255, 255, 0]).unwrap();
        assert!(ncc_match(&img, &same)
            .unwrap()
            .scores()
            .iter()
            .all(|&s| s == 0.5));
        assert!(ncc_match(&img, &far)
            .unwrap()
            .scores()
            .iter()
            .all(|&s| s == 0.0));
        // textured template, flat window: means 127.5 vs 100 differ by more than 1
        assert!(ncc_match(&img, &textured)
            .unwrap()
            .scores()
            .iter()
            .all(|&s| s == 0.0));
    }

    /// Sum of squared differences over every placement; the argmin is the
    /// oracle for where a planted copy sits.
    fn ssd_argmin(img: &GrayImage, tpl: &GrayImage) -> (u32, u32) {
        let mut best = (u64::MAX, 0, 0);
        for y in 0..=img.height() - tpl.height() {
            for x in 0..=img.width() - tpl.width() {
                let mut ssd = 0u64;
                for ty in 0..tpl.height() {
                    for tx in 0..tpl.width() {
                        let d = i64::from(img.get(x + tx, y + ty)) - i64::from(tpl.get(tx, ty));
                        ssd += (d * d) as u64;
                    }
                }
                if ssd < best.0 {
                    best = (ssd, x, y);
                }
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn planted_texture_is_found_where_ssd_says() {
        let mut img = noise(64, 64, 3);
        let tex = noise(16, 16, 4);
        img.paste(&tex, 5, 7);
        assert_eq!(ssd_argmin(&img, &tex), (5, 7));
        let (x, y, s) = ncc_match(&img, &tex).unwrap().argmax();
        assert_eq!((x, y), (5, 7));
        assert!(s > 0.999);
    }

    #[test]
    fn affine_template_change_keeps_argmax() {
        let mut img = noise(40, 30, 5);
        let tex = noise(8, 8, 6);
        img.paste(&tex, 20, 11);
        let base = ncc_match(&img, &tex).unwrap().argmax();
        for (a, b) in [(0.5, 10.0), (0.25, 100.0), (0.9, 3.0)] {
            let t2 = GrayImage::from_fn(8, 8, |x, y| (a * f64::from(tex.get(x, y)) + b) as u8);
            let m = ncc_match(&img, &t2).unwrap().argmax();
            assert_eq!((m.0, m.1), (base.0, base.1));
        }
    }

    #[test]
    fn argmax_prefers_first_in_raster_order() {
        let map = ScoreMap::new(3, 2, vec![0.1, 0.9, 0.2, 0.9, 0.0, 0.0]);
        assert_eq!(map.argmax(), (1, 0, 0.9));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn affine_invariance(seed in 0u64..10_000, a in 0.3f64..=1.0, frac in 0.0f64..=1.0, x in 0u32..32, y in 0u32..22) {
            let mut img = noise(40, 30, seed);
            let tex = noise(8, 8, seed + 1);
            img.paste(&tex, x, y);
            let b = frac * 255.0 * (1.0 - a);
            let t2 = GrayImage::from_fn(8, 8, |u, v| (a * f64::from(tex.get(u, v)) + b).round() as u8);
            let want = ncc_match(&img, &tex).unwrap().argmax();
            let got = ncc_match(&img, &t2).unwrap().argmax();
            proptest::prop_assert_eq!((got.0, got.1), (want.0, want.1));
        }
    }
}

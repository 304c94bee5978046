//! Multi-scale, multi-template matching with greedy non-max suppression.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::contour::contourize;
use super::fftcorr::{CorrPlan, Spectrum};
use super::ncc::{zncc_score, TemplateStats};
use super::{resize_nearest, GrayImage, ImagingError, Integral};
use crate::types::{Detection, Region};

/// Binarisation level used for edge maps in [`MatchMode::Contour`].
pub const CONTOUR_LEVEL: u8 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchMode {
    /// Correlate gray intensities.
    Color,
    /// Correlate boundary maps, ignoring fill colours.
    Contour,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    pub scales: Vec<f64>,
    pub score_threshold: f64,
    pub mode: MatchMode,
    pub nms_iou: f64,
}

/// Geometric ladder 0.5, 0.55, ... (x1.1), 15 steps up to ~1.9.
pub fn default_scale_ladder() -> Vec<f64> {
    (0..15).map(|k| 0.5 * 1.1f64.powi(k)).collect()
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            scales: default_scale_ladder(),
            score_threshold: 0.8,
            mode: MatchMode::Color,
            nms_iou: 0.3,
        }
    }
}

impl MatchConfig {
    pub fn with_mode(mut self, mode: MatchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), ImagingError> {
        let bad = |m: &str| Err(ImagingError::BadConfig(m.to_string()));
        if self.scales.is_empty() {
            return bad("scales must not be empty");
        }
        if self.scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return bad("scales must be positive");
        }
        if self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return bad("scales must be strictly increasing");
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return bad("score_threshold must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.nms_iou) {
            return bad("nms_iou must be in [0, 1]");
        }
        Ok(())
    }
}

/// A named template and the mode it is matched in.
#[derive(Debug, Clone)]
pub struct TemplateSpec {
    pub label: String,
    pub image: GrayImage,
    pub mode: MatchMode,
}

struct Scaled {
    template: usize,
    scale: f64,
    mode: MatchMode,
    image: GrayImage,
    stats: TemplateStats,
}

struct Prepared {
    plan: CorrPlan,
    /// Parallel to `MultiScaleMatcher::scaled`; `None` when the scaled
    /// template does not fit the image.
    spectra: Vec<Option<Spectrum>>,
}

struct Candidate {
    score: f32,
    region: Region,
    scaled: usize,
}

/// Reusable matcher: templates are resized once and their spectra are
/// cached per image size, so repeated frames only pay for the image
/// transform and one inverse transform per (template, scale).
pub struct MultiScaleMatcher {
    cfg: MatchConfig,
    labels: Vec<String>,
    scaled: Vec<Scaled>,
    cache: Mutex<HashMap<(u32, u32), Arc<Prepared>>>,
}

impl std::fmt::Debug for MultiScaleMatcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiScaleMatcher")
            .field("labels", &self.labels)
            .field("cfg", &self.cfg)
            .finish()
    }
}

impl MultiScaleMatcher {
    pub fn new(templates: Vec<TemplateSpec>, cfg: MatchConfig) -> Result<Self, ImagingError> {
        cfg.validate()?;
        let mut scaled = Vec::new();
        for (ti, t) in templates.iter().enumerate() {
            for &scale in &cfg.scales {
                let resized = resize_nearest(&t.image, scale);
                let image = match t.mode {
                    MatchMode::Color => resized,
                    MatchMode::Contour => contourize(&resized, CONTOUR_LEVEL),
                };
                let stats = TemplateStats::of(&image);
                // A flat template can score at most 0.5.
                if stats.var_n == 0 && cfg.score_threshold > 0.5 {
                    continue;
                }
                scaled.push(Scaled {
                    template: ti,
                    scale,
                    mode: t.mode,
                    image,
                    stats,
                });
            }
        }
        Ok(MultiScaleMatcher {
            cfg,
            labels: templates.into_iter().map(|t| t.label).collect(),
            scaled,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &MatchConfig {
        &self.cfg
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    fn prepared(&self, w: u32, h: u32) -> Arc<Prepared> {
        if let Some(p) = self
            .cache
            .lock()
            .expect("matcher cache poisoned")
            .get(&(w, h))
        {
            return Arc::clone(p);
        }
        let plan = CorrPlan::new(w, h);
        let spectra = self
            .scaled
            .par_iter()
            .map(|s| {
                (s.image.width() <= w && s.image.height() <= h)
                    .then(|| plan.template_spectrum(&s.image))
            })
            .collect();
        let prepared = Arc::new(Prepared { plan, spectra });
        self.cache
            .lock()
            .expect("matcher cache poisoned")
            .entry((w, h))
            .or_insert(prepared)
            .clone()
    }

    /// All detections in `image`, after non-max suppression.
    pub fn detect(&self, image: &GrayImage) -> Vec<Detection> {
        let (w, h) = (image.width(), image.height());
        let prep = self.prepared(w, h);
        let uses = |m: MatchMode| {
            self.scaled
                .iter()
                .zip(&prep.spectra)
                .any(|(s, sp)| s.mode == m && sp.is_some())
        };
        let prepare_source = |img: GrayImage| {
            let spectrum = prep.plan.image_spectrum(&img);
            (Integral::new(&img), spectrum)
        };
        let color = uses(MatchMode::Color).then(|| prepare_source(image.clone()));
        let contour =
            uses(MatchMode::Contour).then(|| prepare_source(contourize(image, CONTOUR_LEVEL)));

        let threshold = self.cfg.score_threshold;
        let candidates: Vec<Candidate> = self
            .scaled
            .par_iter()
            .zip(prep.spectra.par_iter())
            .enumerate()
            .filter_map(|(i, (s, sp))| Some((i, s, sp.as_ref()?)))
            .flat_map_iter(|(i, s, spectrum)| {
                let (ii, image_spec) = match s.mode {
                    MatchMode::Color => color.as_ref(),
                    MatchMode::Contour => contour.as_ref(),
                }
                .expect("source prepared for every mode in use");
                let corr = prep.plan.correlate(image_spec, spectrum);
                let (tw, th) = (s.image.width(), s.image.height());
                let n = s.stats.n as f64;
                let tv = s.stats.var_n as f64;
                // Score >= threshold  <=>  num >= k * sqrt(wv * tv), k = 2t - 1.
                let k = 2.0 * threshold - 1.0;
                let k2tv = k * k * tv;
                let mut out = Vec::new();
                for y in 0..=h - th {
                    for x in 0..=w - tw {
                        let c = corr[y as usize * w as usize + x as usize];
                        // Non-positive correlation scores at most 0.5.
                        if c <= 0.0 && threshold > 0.5 {
                            continue;
                        }
                        let (ws, wq) = ii.window(x as usize, y as usize, tw as usize, th as usize);
                        if threshold > 0.5 && tv > 0.0 {
                            let num = n * c;
                            let (wsf, wqf) = (ws as f64, wq as f64);
                            let wv = n * wqf - wsf * wsf;
                            if wv <= 0.0 {
                                // Flat window: scores at most 0.5.
                                continue;
                            }
                            if num * num < k2tv * wv * (1.0 - 1e-9) {
                                continue;
                            }
                        }
                        let score = zncc_score(&s.stats, ws, wq, n * c);
                        if f64::from(score) >= threshold {
                            out.push(Candidate {
                                score,
                                region: Region { x, y, w: tw, h: th },
                                scaled: i,
                            });
                        }
                    }
                }
                out.into_iter()
            })
            .collect();

        let detections: Vec<Detection> = candidates
            .into_iter()
            .map(|c| {
                let s = &self.scaled[c.scaled];
                Detection {
                    region: c.region,
                    score: f64::from(c.score).clamp(0.0, 1.0),
                    scale: s.scale,
                    label: self.labels[s.template].clone(),
                }
            })
            .collect();
        non_max_suppression(detections, self.cfg.nms_iou)
    }
}

/// Greedy suppression by descending score; a detection is dropped when its
/// IoU with an already kept one exceeds `max_iou`. Ties keep input order.
pub fn non_max_suppression(mut detections: Vec<Detection>, max_iou: f64) -> Vec<Detection> {
    detections.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut kept: Vec<Detection> = Vec::new();
    for d in detections {
        if kept.iter().all(|k| k.region.iou(&d.region) <= max_iou) {
            kept.push(d);
        }
    }
    kept
}

/// Matches every template at every configured scale in `cfg.mode`.
/// Templates are labelled `template_<index>`.
pub fn match_multiscale(
    image: &GrayImage,
    templates: &[GrayImage],
    cfg: &MatchConfig,
) -> Result<Vec<Detection>, ImagingError> {
    let specs = templates
        .iter()
        .enumerate()
        .map(|(i, t)| TemplateSpec {
            label: format!("template_{i}"),
            image: t.clone(),
            mode: cfg.mode,
        })
        .collect();
    Ok(MultiScaleMatcher::new(specs, cfg.clone())?.detect(image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::ncc_match;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: u32, h: u32, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.random())
    }

    /// A blocky pattern that survives nearest-neighbour scaling.
    fn blocks(w: u32, h: u32, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells: Vec<u8> = (0..64).map(|_| rng.random()).collect();
        GrayImage::from_fn(w, h, |x, y| cells[((y * 8 / h) * 8 + x * 8 / w) as usize])
    }

    #[test]
    fn default_config() {
        let cfg = MatchConfig::default();
        assert_eq!(cfg.scales.len(), 15);
        assert!((cfg.scales[0] - 0.5).abs() < 1e-12);
        assert!(cfg.scales[14] < 2.0 && cfg.scales[14] > 1.89);
        assert_eq!(cfg.score_threshold, 0.8);
        assert_eq!(cfg.nms_iou, 0.3);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let mut cfg = MatchConfig::default();
        cfg.scales = vec![1.0, 1.0];
        assert!(cfg.validate().is_err());
        cfg.scales = vec![];
        assert!(cfg.validate().is_err());
        cfg.scales = vec![1.0];
        cfg.nms_iou = 1.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn flat_image_yields_nothing() {
        let img = GrayImage::filled(80, 60, 200);
        let tpl = blocks(16, 16, 1);
        let dets = match_multiscale(&img, &[tpl], &MatchConfig::default()).unwrap();
        assert!(dets.is_empty());
    }

    #[test]
    fn fft_scores_agree_with_direct_ncc() {
        let mut img = noise(50, 40, 2);
        let tpl = noise(9, 7, 3);
        img.paste(&tpl, 30, 20);
        let direct = ncc_match(&img, &tpl).unwrap();
        let cfg = MatchConfig {
            scales: vec![1.0],
            score_threshold: 0.0,
            mode: MatchMode::Color,
            nms_iou: 1.0,
        };
        let m = MultiScaleMatcher::new(
            vec![TemplateSpec {
                label: "t".into(),
                image: tpl,
                mode: MatchMode::Color,
            }],
            cfg,
        )
        .unwrap();
        let dets = m.detect(&img);
        assert_eq!(dets.len(), direct.scores().len());
        for d in dets {
            let s = direct.get(d.region.x, d.region.y);
            assert!(
                (d.score - f64::from(s)).abs() < 1e-5,
                "{:?}: {} vs {}",
                d.region,
                d.score,
                s
            );
        }
    }

    #[test]
    fn unscaled_plant_gives_one_detection() {
        let mut img = noise(96, 80, 4);
        let tpl = blocks(24, 16, 5);
        img.paste(&tpl, 41, 33);
        let cfg = MatchConfig {
            scales: vec![1.0],
            ..MatchConfig::default()
        };
        // Oracle: exhaustive single-scale scoring.
        let (ox, oy, os) = ncc_match(&img, &tpl).unwrap().argmax();
        assert_eq!((ox, oy), (41, 33));
        assert!(os >= 0.99);
        let dets = match_multiscale(&img, &[tpl], &cfg).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].region, Region::new(41, 33, 24, 16).unwrap());
        assert_eq!(dets[0].scale, 1.0);
        assert!(dets[0].score >= 0.99);
    }

    #[test]
    fn scaled_plant_reports_its_scale() {
        let mut img = noise(140, 120, 6);
        let tpl = blocks(32, 24, 7);
        let planted = resize_nearest(&tpl, 1.25);
        img.paste(&planted, 50, 40);
        let cfg = MatchConfig {
            scales: vec![0.8, 1.0, 1.25, 1.5],
            ..MatchConfig::default()
        };
        // Oracle per scale: the exhaustive scorer peaks at the plant for 1.25.
        let oracle = ncc_match(&img, &resize_nearest(&tpl, 1.25))
            .unwrap()
            .argmax();
        assert_eq!((oracle.0, oracle.1), (50, 40));
        let dets = match_multiscale(&img, &[tpl], &cfg).unwrap();
        assert_eq!(dets.len(), 1, "{dets:?}");
        assert_eq!(dets[0].scale, 1.25);
        let r = dets[0].region;
        assert!(r.x.abs_diff(50) <= 2 && r.y.abs_diff(40) <= 2);
        assert_eq!((r.w, r.h), (planted.width(), planted.height()));
    }

    #[test]
    fn contour_mode_ignores_fill_colour() {
        // Ring drawn dark-on-light in the template, a different dark shade in
        // the image: the binarised boundaries coincide.
        let ring = |fg: u8| {
            GrayImage::from_fn(30, 30, |x, y| {
                let d = ((x as f64 - 14.5).powi(2) + (y as f64 - 14.5).powi(2)).sqrt();
                if (9.0..13.0).contains(&d) {
                    fg
                } else {
                    230
                }
            })
        };
        let mut img = GrayImage::filled(100, 70, 240);
        img.paste(&ring(90), 60, 20);
        let cfg = MatchConfig {
            scales: vec![1.0],
            mode: MatchMode::Contour,
            ..MatchConfig::default()
        };
        let dets = match_multiscale(&img, &[ring(20)], &cfg).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!((dets[0].region.x, dets[0].region.y), (60, 20));
    }

    #[test]
    fn template_too_large_is_skipped() {
        let img = noise(20, 20, 8);
        let tpl = noise(30, 10, 9);
        let cfg = MatchConfig {
            scales: vec![1.0],
            ..MatchConfig::default()
        };
        assert!(match_multiscale(&img, &[tpl], &cfg).unwrap().is_empty());
    }

    #[test]
    fn nms_keeps_best_and_drops_overlaps() {
        let d = |x, s| Detection {
            region: Region::new(x, 0, 10, 10).unwrap(),
            score: s,
            scale: 1.0,
            label: String::new(),
        };
        let kept = non_max_suppression(vec![d(0, 0.9), d(2, 0.95), d(30, 0.85), d(5, 0.8)], 0.3);
        let xs: Vec<u32> = kept.iter().map(|k| k.region.x).collect();
        assert_eq!(xs, vec![2, 30]);
    }

    proptest::proptest! {
        #[test]
        fn nms_output_never_overlaps_beyond_threshold(
            boxes in proptest::collection::vec((0u32..60, 0u32..60, 1u32..30, 1u32..30, 0.0f64..=1.0), 0..40),
            max_iou in 0.0f64..=1.0,
        ) {
            let dets = boxes
                .iter()
                .map(|&(x, y, w, h, score)| Detection {
                    region: Region::new(x, y, w, h).unwrap(),
                    score,
                    scale: 1.0,
                    label: String::new(),
                })
                .collect();
            let kept = non_max_suppression(dets, max_iou);
            for (i, a) in kept.iter().enumerate() {
                for b in &kept[i + 1..] {
                    proptest::prop_assert!(a.region.iou(&b.region) <= max_iou);
                }
            }
        }
    }
}

//! Pipeline configuration files.
//!
//! A config is a TOML document tagged `schema = "screenveil.pipeline/1"`.
//! Relative paths are resolved against the directory holding the file.
//! Every optional key has a default, and [`PipelineConfig::to_toml`] writes
//! all of them out, so loading and re-emitting a normalized config gives
//! the same text back.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use screenveil::hooks::{Action, ColorRangeDetector, DetectorModel, Pipeline};
use screenveil::imaging::{default_scale_ladder, MatchConfig, MatchMode, ScrollParams};
use screenveil::interventions::{
    demetrify_with, hate_filter, load_masks, moderate_media, occlude_elements_with, Lexicon,
    MediaStyle, Session, UsageLockConfig,
};

use crate::CliError;

pub const SCHEMA: &str = "screenveil.pipeline/1";

/// Detector names accepted by `moderate_media`.
pub const DETECTORS: &[&str] = &["skin"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InpaintMethod {
    #[default]
    Majority,
    Fmm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    #[default]
    Box,
    Patch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchSection {
    #[serde(default = "default_scale_ladder")]
    pub scales: Vec<f64>,
    #[serde(default = "default_score_threshold")]
    pub score_threshold: f64,
    #[serde(default = "default_nms_iou")]
    pub nms_iou: f64,
}

impl Default for MatchSection {
    fn default() -> Self {
        MatchSection {
            scales: default_scale_ladder(),
            score_threshold: default_score_threshold(),
            nms_iou: default_nms_iou(),
        }
    }
}

fn default_score_threshold() -> f64 {
    0.8
}

fn default_nms_iou() -> f64 {
    0.3
}

fn default_fmm_radius() -> u32 {
    5
}

fn default_hate_threshold() -> f64 {
    0.5
}

fn default_detector() -> String {
    DETECTORS[0].to_string()
}

fn default_s0() -> u64 {
    10
}

fn default_s1() -> u64 {
    30
}

fn default_max_alpha() -> f64 {
    0.9
}

fn default_strip_height() -> u32 {
    ScrollParams::default().strip_height
}

fn default_search_window() -> u32 {
    ScrollParams::default().search_window
}

fn default_min_score() -> f64 {
    ScrollParams::default().min_score
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Intervention {
    OccludeElements {
        masks: PathBuf,
        /// Also occlude matches covering more than half the frame.
        #[serde(default)]
        full_screen: bool,
    },
    Demetrify {
        masks: PathBuf,
    },
    HateFilter {
        lexicon: PathBuf,
        #[serde(default = "default_hate_threshold")]
        threshold: f64,
    },
    ModerateMedia {
        #[serde(default = "default_detector")]
        detector: String,
        #[serde(default)]
        style: Style,
    },
    UsageLock {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        event_px: Option<u32>,
        #[serde(default = "default_s0")]
        s0: u64,
        #[serde(default = "default_s1")]
        s1: u64,
        #[serde(default = "default_max_alpha")]
        max_alpha: f64,
        #[serde(default = "default_strip_height")]
        strip_height: u32,
        #[serde(default = "default_search_window")]
        search_window: u32,
        #[serde(default = "default_min_score")]
        min_score: f64,
    },
}

impl Intervention {
    /// The name clients use in HELLO; also the hook binding name.
    pub fn name(&self) -> &'static str {
        match self {
            Intervention::OccludeElements { .. } => "occlude_elements",
            Intervention::Demetrify { .. } => "demetrify",
            Intervention::HateFilter { .. } => "hate_filter",
            Intervention::ModerateMedia { .. } => "moderate_media",
            Intervention::UsageLock { .. } => "usage_lock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema: String,
    #[serde(default)]
    pub inpaint: InpaintMethod,
    #[serde(default = "default_fmm_radius")]
    pub fmm_radius: u32,
    #[serde(default, rename = "match")]
    pub matching: MatchSection,
    #[serde(default, rename = "intervention")]
    pub interventions: Vec<Intervention>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl PipelineConfig {
    /// Parses and range-checks a config without touching the filesystem.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are always representable in TOML")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA {
            return Err(config_err(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                self.schema
            )));
        }
        if self.fmm_radius == 0 {
            return Err(config_err("fmm_radius must be at least 1"));
        }
        self.match_config(MatchMode::Color)
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        let mut seen: Vec<&str> = Vec::new();
        for iv in &self.interventions {
            if seen.contains(&iv.name()) {
                return Err(config_err(format!(
                    "intervention {} is listed twice",
                    iv.name()
                )));
            }
            seen.push(iv.name());
            match iv {
                Intervention::HateFilter { threshold, .. }
                    if !(*threshold > 0.0 && *threshold <= 1.0) =>
                {
                    return Err(config_err(format!(
                        "hate_filter threshold {threshold} must be in (0, 1]"
                    )));
                }
                Intervention::ModerateMedia { detector, .. }
                    if !DETECTORS.contains(&detector.as_str()) =>
                {
                    return Err(config_err(format!(
                        "unknown detector {detector:?}; known: {}",
                        DETECTORS.join(", ")
                    )));
                }
                Intervention::UsageLock { .. } => {
                    self.usage_lock()
                        .expect("matched above")
                        .validate()
                        .map_err(config_err)?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn match_config(&self, mode: MatchMode) -> MatchConfig {
        MatchConfig {
            scales: self.matching.scales.clone(),
            score_threshold: self.matching.score_threshold,
            mode,
            nms_iou: self.matching.nms_iou,
        }
    }

    pub fn inpaint_action(&self) -> Action {
        match self.inpaint {
            InpaintMethod::Majority => Action::InpaintMajority,
            InpaintMethod::Fmm => Action::InpaintFmm {
                radius: self.fmm_radius,
            },
        }
    }

    pub fn usage_lock(&self) -> Option<UsageLockConfig> {
        self.interventions.iter().find_map(|iv| match *iv {
            Intervention::UsageLock {
                event_px,
                s0,
                s1,
                max_alpha,
                strip_height,
                search_window,
                min_score,
            } => Some(UsageLockConfig {
                event_px,
                s0,
                s1,
                max_alpha,
                scroll: ScrollParams {
                    strip_height,
                    search_window,
                    min_score,
                },
            }),
            _ => None,
        })
    }

    /// Loads every referenced file (relative paths against `base`) and
    /// builds the hook pipeline.
    pub fn build(&self, base: &Path) -> Result<Runtime, CliError> {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let err = |e: screenveil::interventions::InterventionError| config_err(e.to_string());
        let mut pipeline = Pipeline::new();
        let mut names = Vec::new();
        for iv in &self.interventions {
            names.push(iv.name().to_string());
            let binding = match iv {
                Intervention::OccludeElements { masks, full_screen } => {
                    let mut masks = load_masks(&resolve(masks), MatchMode::Contour).map_err(err)?;
                    for m in &mut masks {
                        m.full_screen = *full_screen;
                    }
                    let mut b = occlude_elements_with(masks, self.match_config(MatchMode::Contour))
                        .map_err(err)?;
                    b.action = self.inpaint_action();
                    b
                }
                Intervention::Demetrify { masks } => {
                    let masks = load_masks(&resolve(masks), MatchMode::Color).map_err(err)?;
                    let mut b =
                        demetrify_with(masks, self.match_config(MatchMode::Color)).map_err(err)?;
                    b.action = self.inpaint_action();
                    b
                }
                Intervention::HateFilter { lexicon, threshold } => {
                    let lex = Lexicon::load(&resolve(lexicon)).map_err(err)?;
                    hate_filter(lex, *threshold).map_err(err)?
                }
                Intervention::ModerateMedia { detector, style } => {
                    let model: Arc<dyn DetectorModel> = match detector.as_str() {
                        "skin" => Arc::new(ColorRangeDetector::skin()),
                        other => return Err(config_err(format!("unknown detector {other:?}"))),
                    };
                    let style = match style {
                        Style::Box => MediaStyle::Box,
                        Style::Patch => MediaStyle::Patch,
                    };
                    let mut b = moderate_media(model, style);
                    if style == MediaStyle::Patch {
                        b.action = self.inpaint_action();
                    }
                    b
                }
                Intervention::UsageLock { .. } => continue,
            };
            pipeline
                .push(binding)
                .map_err(|e| config_err(e.to_string()))?;
        }
        Ok(Runtime {
            pipeline,
            usage_lock: self.usage_lock(),
            names,
        })
    }
}

/// Reads, validates and builds the config at `path`.
pub fn load(path: &Path) -> Result<(PipelineConfig, Runtime), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = PipelineConfig::parse(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let rt = cfg.build(base)?;
    Ok((cfg, rt))
}

/// A built pipeline from which sessions are cut.
#[derive(Debug, Clone)]
pub struct Runtime {
    pub pipeline: Pipeline,
    pub usage_lock: Option<UsageLockConfig>,
    names: Vec<String>,
}

impl Runtime {
    /// Intervention names in config order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// A fresh session with only the `requested` interventions enabled, or
    /// all of them when `requested` is empty.
    pub fn session(&self, requested: &[String]) -> Result<Session, String> {
        if let Some(unknown) = requested.iter().find(|r| !self.names.contains(r)) {
            return Err(format!("intervention {unknown:?} is not configured"));
        }
        let wants = |n: &str| requested.is_empty() || requested.iter().any(|r| r == n);
        let mut pipeline = self.pipeline.clone();
        for n in &self.names {
            pipeline.set_enabled(n, wants(n));
        }
        let lock = self.usage_lock.clone().filter(|_| wants("usage_lock"));
        Ok(Session::new(pipeline, lock))
    }
}

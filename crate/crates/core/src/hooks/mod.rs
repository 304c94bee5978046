//! Text, mask and model hooks, and the executor that turns a frame into an
//! overlay plan.

mod model;
pub mod text;

use std::fmt;
use std::path::Path;
use std::sync::{Arc, LazyLock};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

pub use model::{ColorRangeDetector, DetectorModel, FnClassifier, ModelError, TextClassifier};
pub use text::{detect_text_regions, otsu_threshold, recognize_text, TextBox};

use crate::imaging::{
    inpaint_fmm, inpaint_majority, to_gray, GrayImage, ImagingError, MatchConfig, MatchMode,
    MultiScaleMatcher, TemplateSpec,
};
use crate::io::{load_frame, IoError};
use crate::types::{Detection, Frame, LatencyRecord, OverlayOp, OverlayPlan, Region, Rgba};

#[derive(Debug, Error)]
pub enum HookError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("model failed: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("mask {name} is {w}x{h}; masks must be at least 4x4")]
    MaskTooSmall { name: String, w: u32, h: u32 },
    #[error("a mask hook needs at least one mask")]
    NoMasks,
    #[error("threshold {0} is not a valid score threshold")]
    BadThreshold(f64),
    #[error("a hook named {0:?} is already registered")]
    DuplicateName(String),
    #[error("hook emitted an op outside the frame: {0:?}")]
    OpOutOfBounds(Region),
    #[error("{0}")]
    Action(String),
}

/// A cropped screenshot of an interface element.
#[derive(Debug, Clone)]
pub struct Mask {
    name: String,
    template: GrayImage,
    color: Frame,
    mode: MatchMode,
    /// Whether detections covering more than half the frame are kept.
    pub full_screen: bool,
}

impl Mask {
    pub fn from_frame(
        name: impl Into<String>,
        image: &Frame,
        mode: MatchMode,
    ) -> Result<Self, HookError> {
        let name = name.into();
        if image.width() < 4 || image.height() < 4 {
            return Err(HookError::MaskTooSmall {
                name,
                w: image.width(),
                h: image.height(),
            });
        }
        Ok(Mask {
            name,
            template: to_gray(image),
            color: image.clone(),
            mode,
            full_screen: false,
        })
    }

    /// Loads an image file; the mask is named after the file stem.
    pub fn load(path: &Path, mode: MatchMode) -> Result<Self, HookError> {
        let frame = load_frame(path, 0, 0)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Mask::from_frame(name, &frame, mode)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn template(&self) -> &GrayImage {
        &self.template
    }

    pub fn color_image(&self) -> &Frame {
        &self.color
    }

    pub fn mode(&self) -> MatchMode {
        self.mode
    }
}

pub type CustomAction =
    Arc<dyn Fn(&Frame, &[Detection]) -> Result<Vec<OverlayOp>, HookError> + Send + Sync>;

/// What a hook renders over its detections.
#[derive(Clone)]
pub enum Action {
    FillRect(Rgba),
    InpaintMajority,
    InpaintFmm { radius: u32 },
    Custom(CustomAction),
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::FillRect(c) => write!(f, "FillRect({c})"),
            Action::InpaintMajority => write!(f, "InpaintMajority"),
            Action::InpaintFmm { radius } => write!(f, "InpaintFmm {{ radius: {radius} }}"),
            Action::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Action {
    pub fn apply(
        &self,
        frame: &Frame,
        detections: &[Detection],
    ) -> Result<Vec<OverlayOp>, HookError> {
        match self {
            Action::FillRect(c) => Ok(detections
                .iter()
                .map(|d| OverlayOp::fill_rect(d.region, *c))
                .collect()),
            Action::InpaintMajority => detections
                .iter()
                .map(|d| Ok(inpaint_majority(frame, d.region)?))
                .collect(),
            Action::InpaintFmm { radius } => detections
                .iter()
                .map(|d| Ok(inpaint_fmm(frame, d.region, *radius)?))
                .collect(),
            Action::Custom(f) => f(frame, detections),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HookKind {
    Text,
    Mask,
    Model,
}

/// Parameters of one hook.
#[derive(Clone)]
pub enum HookSpec {
    Text {
        classifier: Arc<dyn TextClassifier>,
        threshold: f64,
    },
    Mask {
        masks: Arc<[Mask]>,
        matcher: Arc<MultiScaleMatcher>,
    },
    Model {
        model: Arc<dyn DetectorModel>,
    },
}

impl fmt::Debug for HookSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HookSpec::Text {
                classifier,
                threshold,
            } => f
                .debug_struct("Text")
                .field("classifier", &classifier.name())
                .field("threshold", threshold)
                .finish(),
            HookSpec::Mask { masks, matcher } => f
                .debug_struct("Mask")
                .field("masks", &masks.iter().map(Mask::name).collect::<Vec<_>>())
                .field("cfg", matcher.config())
                .finish(),
            HookSpec::Model { model } => f
                .debug_struct("Model")
                .field("model", &model.name())
                .finish(),
        }
    }
}

impl HookSpec {
    pub fn text(classifier: Arc<dyn TextClassifier>, threshold: f64) -> Result<Self, HookError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(HookError::BadThreshold(threshold));
        }
        Ok(HookSpec::Text {
            classifier,
            threshold,
        })
    }

    /// Prepares a matcher over `masks`. Each mask is matched in its own mode;
    /// `cfg.mode` is ignored.
    pub fn mask(masks: Vec<Mask>, cfg: MatchConfig) -> Result<Self, HookError> {
        if masks.is_empty() {
            return Err(HookError::NoMasks);
        }
        let templates = masks
            .iter()
            .map(|m| TemplateSpec {
                label: m.name.clone(),
                image: m.template.clone(),
                mode: m.mode,
            })
            .collect();
        let matcher = MultiScaleMatcher::new(templates, cfg)?;
        Ok(HookSpec::Mask {
            masks: masks.into(),
            matcher: Arc::new(matcher),
        })
    }

    pub fn model(model: Arc<dyn DetectorModel>) -> Self {
        HookSpec::Model { model }
    }

    pub fn kind(&self) -> HookKind {
        match self {
            HookSpec::Text { .. } => HookKind::Text,
            HookSpec::Mask { .. } => HookKind::Mask,
            HookSpec::Model { .. } => HookKind::Model,
        }
    }
}

/// Result of evaluating one hook on one frame.
#[derive(Debug, Clone, Default)]
pub struct HookOutput {
    pub ops: Vec<OverlayOp>,
    pub detections: Vec<Detection>,
    /// Every line the text hook read, flagged or not.
    pub text_boxes: Vec<TextBox>,
}

#[derive(Debug, Clone)]
pub struct HookBinding {
    pub name: String,
    pub spec: HookSpec,
    pub action: Action,
    pub registration_index: usize,
    pub enabled: bool,
}

impl HookBinding {
    pub fn new(name: impl Into<String>, spec: HookSpec, action: Action) -> Self {
        HookBinding {
            name: name.into(),
            spec,
            action,
            registration_index: 0,
            enabled: true,
        }
    }

    pub fn kind(&self) -> HookKind {
        self.spec.kind()
    }

    pub fn evaluate(&self, frame: &Frame) -> Result<HookOutput, HookError> {
        let mut out = HookOutput::default();
        match &self.spec {
            HookSpec::Text {
                classifier,
                threshold,
            } => {
                out.text_boxes = read_text(frame)?;
                out.detections = flag_text(&out.text_boxes, classifier.as_ref(), *threshold);
            }
            HookSpec::Mask { masks, matcher } => {
                out.detections = match_masks(frame, masks, matcher);
            }
            HookSpec::Model { model } => {
                out.detections = model.infer(frame)?;
            }
        }
        out.ops = self.action.apply(frame, &out.detections)?;
        if let Some(r) = out
            .ops
            .iter()
            .filter_map(OverlayOp::region)
            .find(|r| !r.fits_within(frame.width(), frame.height()))
        {
            return Err(HookError::OpOutOfBounds(r));
        }
        Ok(out)
    }
}

fn read_text(frame: &Frame) -> Result<Vec<TextBox>, HookError> {
    let gray = to_gray(frame);
    detect_text_regions(&gray)
        .into_iter()
        .map(|r| Ok(recognize_text(&gray, r)?))
        .collect()
}

fn flag_text(boxes: &[TextBox], classifier: &dyn TextClassifier, threshold: f64) -> Vec<Detection> {
    boxes
        .iter()
        .filter_map(|b| {
            let score = classifier.score(&b.text).clamp(0.0, 1.0);
            (!b.text.is_empty() && score >= threshold).then(|| Detection {
                region: b.region,
                score,
                scale: 1.0,
                label: classifier.name().to_string(),
            })
        })
        .collect()
}

/// Matches every mask, drops full-screen hits unless the mask allows them,
/// and drops hits lying wholly inside another hit (a small mask matching
/// part of a larger element).
fn match_masks(frame: &Frame, masks: &[Mask], matcher: &MultiScaleMatcher) -> Vec<Detection> {
    let frame_area = frame.bounds().area();
    let hits: Vec<Detection> = matcher
        .detect(&to_gray(frame))
        .into_iter()
        .filter(|d| {
            let full = masks
                .iter()
                .find(|m| m.name == d.label)
                .is_some_and(|m| m.full_screen);
            full || 2 * d.region.area() <= frame_area
        })
        .collect();
    hits.iter()
        .enumerate()
        .filter(|&(i, d)| {
            !hits.iter().enumerate().any(|(j, o)| {
                j != i && o.region.contains_region(&d.region) && (o.region != d.region || j < i)
            })
        })
        .map(|(_, d)| d.clone())
        .collect()
}

/// Detects and reads every text line, then applies `action` to the lines
/// whose classifier score reaches `threshold`.
pub fn run_text_hook(
    frame: &Frame,
    classifier: &dyn TextClassifier,
    threshold: f64,
    action: &Action,
) -> Result<Vec<OverlayOp>, HookError> {
    let boxes = read_text(frame)?;
    action.apply(frame, &flag_text(&boxes, classifier, threshold))
}

/// Matches `masks` at every scale of `cfg` and applies `action`.
pub fn run_mask_hook(
    frame: &Frame,
    masks: &[Mask],
    cfg: &MatchConfig,
    action: &Action,
) -> Result<Vec<OverlayOp>, HookError> {
    let HookSpec::Mask { masks, matcher } = HookSpec::mask(masks.to_vec(), cfg.clone())? else {
        unreachable!("HookSpec::mask builds a mask spec")
    };
    action.apply(frame, &match_masks(frame, &masks, &matcher))
}

pub fn run_model_hook(
    frame: &Frame,
    model: &dyn DetectorModel,
    action: &Action,
) -> Result<Vec<OverlayOp>, HookError> {
    action.apply(frame, &model.infer(frame)?)
}

static EPOCH: LazyLock<Instant> = LazyLock::new(Instant::now);

/// Microseconds on a process-wide monotonic clock.
pub fn monotonic_us() -> u64 {
    EPOCH.elapsed().as_micros() as u64
}

/// Read-only view of session state that accompanies a frame.
#[derive(Debug, Clone, Default)]
pub struct SessionState {
    /// Lines read on the current frame.
    pub text_boxes: Vec<TextBox>,
    /// Ops produced by the sequential session step, e.g. the usage-lock veil.
    pub extra_ops: Vec<OverlayOp>,
    pub frames_seen: u64,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub plan: OverlayPlan,
    pub record: LatencyRecord,
    pub text_boxes: Vec<TextBox>,
}

/// Evaluates every enabled binding concurrently and merges their ops.
///
/// Ops are concatenated in registration order, followed by the session's
/// extra ops, then stably sorted by z. A failing hook contributes nothing
/// and is listed in `record.skipped`.
pub fn run_pipeline(
    frame: &Frame,
    bindings: &[HookBinding],
    session: &SessionState,
) -> PipelineOutput {
    let t_receive_us = monotonic_us();
    let mut active: Vec<&HookBinding> = bindings.iter().filter(|b| b.enabled).collect();
    active.sort_by_key(|b| b.registration_index);
    let results: Vec<(Result<HookOutput, HookError>, u64)> = active
        .par_iter()
        .map(|b| {
            let t0 = Instant::now();
            let r = b.evaluate(frame);
            (r, t0.elapsed().as_micros() as u64)
        })
        .collect();

    let mut record = LatencyRecord {
        frame_id: frame.id(),
        t_receive_us,
        ..Default::default()
    };
    let mut ops = Vec::new();
    let mut text_boxes = Vec::new();
    for (b, (result, us)) in active.iter().zip(results) {
        record.per_hook_us.insert(b.name.clone(), us);
        match result {
            Ok(out) => {
                ops.extend(out.ops);
                text_boxes.extend(out.text_boxes);
            }
            Err(e) => {
                record.skipped.insert(b.name.clone(), e.to_string());
            }
        }
    }
    ops.extend(session.extra_ops.iter().cloned());
    let plan = OverlayPlan::from_ordered_ops(frame.id(), ops);
    record.t_plan_ready_us = monotonic_us();
    record.t_sent_us = record.t_plan_ready_us;
    PipelineOutput {
        plan,
        record,
        text_boxes,
    }
}

/// An ordered set of bindings with unique names and registration indices.
#[derive(Debug, Clone, Default)]
pub struct Pipeline {
    bindings: Vec<HookBinding>,
}

impl Pipeline {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `binding`, assigning the next registration index.
    pub fn push(&mut self, mut binding: HookBinding) -> Result<usize, HookError> {
        if self.bindings.iter().any(|b| b.name == binding.name) {
            return Err(HookError::DuplicateName(binding.name));
        }
        let idx = self.bindings.len();
        binding.registration_index = idx;
        self.bindings.push(binding);
        Ok(idx)
    }

    pub fn bindings(&self) -> &[HookBinding] {
        &self.bindings
    }

    /// Returns false when no binding has that name.
    pub fn set_enabled(&mut self, name: &str, enabled: bool) -> bool {
        match self.bindings.iter_mut().find(|b| b.name == name) {
            Some(b) => {
                b.enabled = enabled;
                true
            }
            None => false,
        }
    }

    pub fn run(&self, frame: &Frame, session: &SessionState) -> PipelineOutput {
        run_pipeline(frame, &self.bindings, session)
    }
}

//! The five shipped interventions and the per-session step that threads
//! usage-lock state through the hook pipeline.

mod lexicon;
mod usage_lock;

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

pub use lexicon::Lexicon;
pub use usage_lock::{ramp_alpha, usage_lock_update, UsageLockConfig, UsageLockState};

use crate::hooks::{
    Action, DetectorModel, HookBinding, HookError, HookSpec, Mask, Pipeline, PipelineOutput,
    SessionState,
};
use crate::imaging::{ImagingError, MatchConfig, MatchMode};
use crate::types::{Frame, Rgba};

#[derive(Debug, Error)]
pub enum InterventionError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Hook(#[from] HookError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Loads every `.png` in `dir`, in file-name order.
pub fn load_masks(dir: &Path, mode: MatchMode) -> Result<Vec<Mask>, InterventionError> {
    let read_err = |source| InterventionError::Read {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(read_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(InterventionError::Config(format!(
            "no mask images in {}",
            dir.display()
        )));
    }
    Ok(paths
        .iter()
        .map(|p| Mask::load(p, mode))
        .collect::<Result<_, _>>()?)
}

fn mask_binding(
    name: &str,
    masks: Vec<Mask>,
    mode: MatchMode,
    cfg: MatchConfig,
) -> Result<HookBinding, InterventionError> {
    let masks = masks
        .into_iter()
        .map(|m| {
            let full = m.full_screen;
            let mut m = Mask::from_frame(m.name(), m.color_image(), mode)?;
            m.full_screen = full;
            Ok(m)
        })
        .collect::<Result<Vec<_>, HookError>>()?;
    let spec = HookSpec::mask(masks, cfg.with_mode(mode))?;
    Ok(HookBinding::new(name, spec, Action::InpaintMajority))
}

/// Removes elements whose outline matches a mask (stories bars and the
/// like), independent of their fill colours.
pub fn occlude_elements(masks_dir: &Path) -> Result<HookBinding, InterventionError> {
    let masks = load_masks(masks_dir, MatchMode::Contour)?;
    occlude_elements_with(masks, MatchConfig::default())
}

pub fn occlude_elements_with(
    masks: Vec<Mask>,
    cfg: MatchConfig,
) -> Result<HookBinding, InterventionError> {
    mask_binding("occlude_elements", masks, MatchMode::Contour, cfg)
}

/// Paints over engagement metrics matched by colour.
pub fn demetrify(masks_dir: &Path) -> Result<HookBinding, InterventionError> {
    let masks = load_masks(masks_dir, MatchMode::Color)?;
    demetrify_with(masks, MatchConfig::default())
}

pub fn demetrify_with(
    masks: Vec<Mask>,
    cfg: MatchConfig,
) -> Result<HookBinding, InterventionError> {
    mask_binding("demetrify", masks, MatchMode::Color, cfg)
}

/// Blacks out every text line whose lexicon score reaches `threshold`.
pub fn hate_filter(lexicon: Lexicon, threshold: f64) -> Result<HookBinding, InterventionError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(InterventionError::Config(format!(
            "hate_filter threshold {threshold} must be in (0, 1]"
        )));
    }
    let spec = HookSpec::text(Arc::new(lexicon), threshold)?;
    Ok(HookBinding::new(
        "hate_filter",
        spec,
        Action::FillRect(Rgba::BLACK),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MediaStyle {
    /// Opaque black box.
    Box,
    /// Majority-colour patch.
    Patch,
}

/// Covers whatever `detector` reports.
pub fn moderate_media(detector: Arc<dyn DetectorModel>, style: MediaStyle) -> HookBinding {
    let action = match style {
        MediaStyle::Box => Action::FillRect(Rgba::BLACK),
        MediaStyle::Patch => Action::InpaintMajority,
    };
    HookBinding::new("moderate_media", HookSpec::model(detector), action)
}

/// One client's sequential state: the previous frame, the usage lock and
/// the text read on the last frame.
#[derive(Debug)]
pub struct Session {
    pipeline: Pipeline,
    usage_lock: Option<UsageLockState>,
    prev: Option<Frame>,
    state: SessionState,
}

impl Session {
    pub fn new(pipeline: Pipeline, usage_lock: Option<UsageLockConfig>) -> Self {
        Session {
            pipeline,
            usage_lock: usage_lock.map(UsageLockState::new),
            prev: None,
            state: SessionState::default(),
        }
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn usage_lock(&self) -> Option<&UsageLockState> {
        self.usage_lock.as_ref()
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    /// Updates the usage lock against the previous frame, then runs the
    /// hooks. A change of frame size restarts scroll tracking.
    pub fn step(&mut self, frame: &Frame) -> PipelineOutput {
        self.state.extra_ops.clear();
        if let Some(lock) = &mut self.usage_lock {
            let veil = match &self.prev {
                Some(prev) if prev.width() == frame.width() && prev.height() == frame.height() => {
                    lock.update(prev, frame).ok().flatten()
                }
                _ => lock.veil(),
            };
            self.state.extra_ops.extend(veil);
        }
        let out = self.pipeline.run(frame, &self.state);
        self.state.text_boxes = out.text_boxes.clone();
        self.state.frames_seen += 1;
        if self.usage_lock.is_some() {
            self.prev = Some(frame.clone());
        }
        out
    }
}

use crate::imaging::{detect_scroll, ImagingError, ScrollParams};
use crate::types::{Frame, OverlayOp, Rgba};

#[derive(Debug, Clone, PartialEq)]
pub struct UsageLockConfig {
    /// Scroll distance that counts as one event; `None` uses the frame
    /// height.
    pub event_px: Option<u32>,
    pub s0: u64,
    pub s1: u64,
    pub max_alpha: f64,
    pub scroll: ScrollParams,
}

impl Default for UsageLockConfig {
    fn default() -> Self {
        UsageLockConfig {
            event_px: None,
            s0: 10,
            s1: 30,
            max_alpha: 0.9,
            scroll: ScrollParams::default(),
        }
    }
}

impl UsageLockConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.s0 >= self.s1 {
            return Err(format!(
                "usage_lock needs s0 < s1, got {} and {}",
                self.s0, self.s1
            ));
        }
        if !(0.0..=1.0).contains(&self.max_alpha) {
            return Err(format!(
                "usage_lock max_alpha {} is outside [0, 1]",
                self.max_alpha
            ));
        }
        if self.event_px == Some(0) {
            return Err("usage_lock event_px must be positive".into());
        }
        Ok(())
    }
}

/// `clamp((events - s0) / (s1 - s0), 0, 1) * max_alpha`.
pub fn ramp_alpha(events: u64, s0: u64, s1: u64, max_alpha: f64) -> f64 {
    let t = (events as f64 - s0 as f64) / (s1 as f64 - s0 as f64);
    t.clamp(0.0, 1.0) * max_alpha
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageLockState {
    pub scroll_events: u64,
    pub accumulated_px: u64,
    pub config: UsageLockConfig,
}

impl UsageLockState {
    pub fn new(config: UsageLockConfig) -> Self {
        UsageLockState {
            scroll_events: 0,
            accumulated_px: 0,
            config,
        }
    }

    pub fn alpha(&self) -> f64 {
        let c = &self.config;
        ramp_alpha(self.scroll_events, c.s0, c.s1, c.max_alpha)
    }

    /// The black veil for the current alpha, if any.
    pub fn veil(&self) -> Option<OverlayOp> {
        let a = self.alpha();
        (a > 0.0).then(|| OverlayOp::veil(a as f32, Rgba::BLACK).expect("alpha lies in [0, 1]"))
    }

    /// Adds `|displacement|` to the accumulated distance and recounts
    /// events.
    pub fn record(&mut self, displacement: i32, frame_height: u32) {
        let event_px = u64::from(self.config.event_px.unwrap_or(frame_height).max(1));
        self.accumulated_px += u64::from(displacement.unsigned_abs());
        self.scroll_events = self.accumulated_px / event_px;
    }

    /// Measures the scroll between two frames and returns the veil to draw.
    pub fn update(&mut self, prev: &Frame, cur: &Frame) -> Result<Option<OverlayOp>, ImagingError> {
        if let Some(d) = detect_scroll(prev, cur, self.config.scroll)? {
            self.record(d, cur.height());
        }
        Ok(self.veil())
    }
}

/// Functional form of [`UsageLockState::update`].
pub fn usage_lock_update(
    state: &UsageLockState,
    prev: &Frame,
    cur: &Frame,
) -> Result<(UsageLockState, Option<OverlayOp>), ImagingError> {
    let mut next = state.clone();
    let op = next.update(prev, cur)?;
    Ok((next, op))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_points() {
        assert_eq!(ramp_alpha(0, 10, 30, 0.9), 0.0);
        assert_eq!(ramp_alpha(10, 10, 30, 0.9), 0.0);
        assert!((ramp_alpha(20, 10, 30, 0.9) - 0.45).abs() < 1e-12);
        assert_eq!(ramp_alpha(30, 10, 30, 0.9), 0.9);
        assert_eq!(ramp_alpha(99, 10, 30, 0.9), 0.9);
    }

    #[test]
    fn no_events_no_veil() {
        let s = UsageLockState::new(UsageLockConfig::default());
        assert_eq!(s.alpha(), 0.0);
        assert!(s.veil().is_none());
    }

    #[test]
    fn events_quantise_absolute_distance() {
        let mut s = UsageLockState::new(UsageLockConfig {
            event_px: Some(100),
            ..Default::default()
        });
        for d in [60, -60, 30, -30, 20] {
            s.record(d, 640);
        }
        assert_eq!(s.accumulated_px, 200);
        assert_eq!(s.scroll_events, 2);
        s.record(0, 640);
        assert_eq!(s.scroll_events, 2);
        // Default event size is the frame height.
        let mut s = UsageLockState::new(UsageLockConfig::default());
        s.record(639, 640);
        assert_eq!(s.scroll_events, 0);
        s.record(-1, 640);
        assert_eq!(s.scroll_events, 1);
    }
}

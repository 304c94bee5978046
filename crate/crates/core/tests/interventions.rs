use std::sync::Arc;

use screenveil::corpus::{
    canonical_mask, generate_screen, generate_scroll_sequence, Element, ElementKind, GroundTruth,
    Layout, ScreenSpec, Theme,
};
use screenveil::hooks::{
    ColorRangeDetector, DetectorModel, HookBinding, Mask, ModelError, Pipeline,
};
use screenveil::imaging::{MatchConfig, MatchMode};
use screenveil::interventions::{
    demetrify_with, hate_filter, load_masks, moderate_media, occlude_elements,
    occlude_elements_with, usage_lock_update, Lexicon, MediaStyle, Session, UsageLockConfig,
    UsageLockState,
};
use screenveil::io::save_frame;
use screenveil::types::{z, Detection, Frame, OpKind, OverlayOp, Region, Rgba};

fn mask(kind: ElementKind, mode: MatchMode) -> Mask {
    Mask::from_frame(
        kind.name(),
        &canonical_mask(kind, Theme::Light).unwrap().to_frame(0, 0),
        mode,
    )
    .unwrap()
}

fn occluder() -> HookBinding {
    occlude_elements_with(
        vec![mask(ElementKind::StoriesBar, MatchMode::Contour)],
        MatchConfig::default(),
    )
    .unwrap()
}

fn demetrifier() -> HookBinding {
    demetrify_with(
        vec![
            mask(ElementKind::MetricsBar, MatchMode::Color),
            mask(ElementKind::Badge, MatchMode::Color),
        ],
        MatchConfig::default(),
    )
    .unwrap()
}

fn ops(b: &HookBinding, f: &Frame) -> Vec<OverlayOp> {
    b.evaluate(f).unwrap().ops
}

/// Each truth rect is covered by exactly one op with IoU >= 0.8, no op is
/// left over, and no op touches protected content.
fn assert_covers(ops: &[OverlayOp], truth: &GroundTruth, kinds: &[ElementKind], what: &str) {
    let want: Vec<Region> = truth
        .entries
        .iter()
        .filter(|e| kinds.contains(&e.kind))
        .map(|e| e.rect)
        .collect();
    let got: Vec<Region> = ops.iter().map(|o| o.region().unwrap()).collect();
    assert_eq!(got.len(), want.len(), "{what}: {got:?} vs {want:?}");
    for w in &want {
        assert!(
            got.iter().any(|g| g.iou(w) >= 0.8),
            "{what}: nothing matches {w:?} in {got:?}"
        );
    }
    for g in &got {
        assert!(
            truth.protected().all(|p| !p.intersects(g)),
            "{what}: {g:?} hits protected content"
        );
    }
}

#[test]
fn occlusion_finds_stories_bars_in_every_theme() {
    let b = occluder();
    for theme in Theme::ALL {
        for seed in 0..4 {
            let (f, truth) =
                generate_screen(&ScreenSpec::random(seed, Layout::Stories, theme)).unwrap();
            assert_eq!(truth.of_kind(ElementKind::StoriesBar).count(), 1);
            let got = ops(&b, &f);
            assert!(got.iter().all(|o| o.z == z::PATCH));
            assert_covers(
                &got,
                &truth,
                &[ElementKind::StoriesBar],
                &format!("{} seed {seed}", theme.name()),
            );
        }
    }
}

#[test]
fn occlusion_ignores_screens_without_a_bar() {
    let b = occluder();
    for seed in 0..3 {
        for layout in [Layout::Settings, Layout::VideoStill] {
            let (f, _) = generate_screen(&ScreenSpec::random(seed, layout, Theme::Light)).unwrap();
            assert!(ops(&b, &f).is_empty(), "{} seed {seed}", layout.name());
        }
    }
}

#[test]
fn demetrify_covers_each_bar_in_app_and_browser() {
    let b = demetrifier();
    for theme in [Theme::Light, Theme::Browser] {
        for seed in 40..44 {
            let (f, truth) =
                generate_screen(&ScreenSpec::random(seed, Layout::Feed, theme)).unwrap();
            assert!(truth.of_kind(ElementKind::MetricsBar).count() >= 1);
            assert_covers(
                &ops(&b, &f),
                &truth,
                &[ElementKind::MetricsBar, ElementKind::Badge],
                &format!("{} seed {seed}", theme.name()),
            );
        }
    }
    for seed in 0..3 {
        let (f, truth) =
            generate_screen(&ScreenSpec::random(seed, Layout::Settings, Theme::Light)).unwrap();
        let got = ops(&b, &f);
        assert_covers(
            &got,
            &truth,
            &[ElementKind::Badge],
            &format!("settings {seed}"),
        );
        assert_eq!(truth.of_kind(ElementKind::MetricsBar).count(), 0);
    }
}

#[test]
fn mask_directories_load_in_name_order() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [ElementKind::StoriesBar, ElementKind::Badge] {
        let f = canonical_mask(kind, Theme::Light).unwrap().to_frame(0, 0);
        save_frame(&f, &dir.path().join(format!("{}.png", kind.name()))).unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let masks = load_masks(dir.path(), MatchMode::Contour).unwrap();
    let names: Vec<&str> = masks.iter().map(Mask::name).collect();
    assert_eq!(names, ["badge", "stories_bar"]);
    assert!(occlude_elements(dir.path()).is_ok());

    let empty = tempfile::tempdir().unwrap();
    assert!(occlude_elements(empty.path()).is_err());
}

#[test]
fn hate_filter_reaches_text_inside_images() {
    let lex = Lexicon::parse("vorpax 0.9\nbraxim 0.2\n").unwrap();
    let b = hate_filter(lex, 0.5).unwrap();
    let pal = Theme::Light.palette();
    let spec = ScreenSpec::blank(3, Layout::Feed, Theme::Light, 360, 400)
        .with(
            12,
            20,
            Element::TextLine {
                text: "BRAXIM SAYS HI".into(),
                scale: 2,
                color: pal.text,
            },
        )
        .with(
            12,
            60,
            Element::ImageBlock {
                width: 336,
                height: 180,
                seed: 9,
                caption: Some("NO MORE VORPAX".into()),
            },
        )
        .with(
            12,
            260,
            Element::TextLine {
                text: "ALL FINE".into(),
                scale: 2,
                color: pal.text,
            },
        );
    let (f, truth) = generate_screen(&spec).unwrap();
    let got = ops(&b, &f);
    assert_eq!(got.len(), 1, "{got:?}");
    let caption = truth
        .of_kind(ElementKind::ImageBlock)
        .next()
        .unwrap()
        .text_rect
        .unwrap();
    assert!(matches!(
        got[0].kind,
        OpKind::FillRect {
            color: Rgba::BLACK,
            ..
        }
    ));
    assert!(got[0].region().unwrap().iou(&caption) >= 0.9);
    assert!(hate_filter(Lexicon::parse("x 0.5").unwrap(), 0.0).is_err());
}

struct Nothing;

impl DetectorModel for Nothing {
    fn name(&self) -> &str {
        "nothing"
    }
    fn infer(&self, _: &Frame) -> Result<Vec<Detection>, ModelError> {
        Ok(Vec::new())
    }
}

#[test]
fn moderate_media_box_and_patch() {
    let patch = |w, h| Element::ColorPatch {
        width: w,
        height: h,
        color: Rgba::opaque(225, 165, 130),
    };
    let spec = ScreenSpec::blank(4, Layout::Feed, Theme::Warm, 360, 300)
        .with(10, 10, patch(60, 40))
        .with(200, 150, patch(50, 70));
    let (f, truth) = generate_screen(&spec).unwrap();
    let want: Vec<Region> = truth.entries.iter().map(|e| e.rect).collect();
    let skin: Arc<dyn DetectorModel> = Arc::new(ColorRangeDetector::skin());

    let boxes = ops(&moderate_media(skin.clone(), MediaStyle::Box), &f);
    assert_eq!(
        boxes
            .iter()
            .map(|o| o.region().unwrap())
            .collect::<Vec<_>>(),
        want
    );
    assert!(boxes.iter().all(|o| matches!(
        o.kind,
        OpKind::FillRect {
            color: Rgba::BLACK,
            ..
        }
    )));
    assert!(!boxes[0]
        .region()
        .unwrap()
        .intersects(&boxes[1].region().unwrap()));

    let patches = ops(&moderate_media(skin, MediaStyle::Patch), &f);
    assert_eq!(patches.len(), 2);
    for (p, r) in patches.iter().zip(&want) {
        let OpKind::Patch { region, pixels } = &p.kind else {
            panic!("expected a patch")
        };
        assert_eq!(region, r);
        let page = Theme::Warm.palette().page;
        assert!(pixels.chunks(4).all(|c| c == page.0));
    }
    assert!(ops(&moderate_media(Arc::new(Nothing), MediaStyle::Box), &f).is_empty());
}

fn lock(event_px: u32) -> UsageLockConfig {
    UsageLockConfig {
        event_px: Some(event_px),
        ..UsageLockConfig::default()
    }
}

#[test]
fn twenty_five_event_sized_shifts_make_twenty_five_events() {
    let spec = ScreenSpec::random(77, Layout::Feed, Theme::Light);
    let frames = generate_scroll_sequence(&spec, &[48; 25]).unwrap();
    let mut state = UsageLockState::new(lock(48));
    let mut alphas = Vec::new();
    for w in frames.windows(2) {
        let (next, veil) = usage_lock_update(&state, &w[0], &w[1]).unwrap();
        assert!(next.scroll_events >= state.scroll_events);
        state = next;
        alphas.push(veil.map_or(0.0, |v| match v.kind {
            OpKind::Veil { alpha, .. } => alpha,
            _ => panic!("usage lock only emits veils"),
        }));
    }
    assert_eq!(state.scroll_events, 25);
    assert_eq!(state.accumulated_px, 25 * 48);
    assert!(alphas.windows(2).all(|a| a[0] <= a[1]));
    assert!((alphas[24] - (15.0 / 20.0 * 0.9) as f32).abs() < 1e-6);
}

#[test]
fn alternating_shifts_still_accumulate() {
    let spec = ScreenSpec::random(78, Layout::Feed, Theme::Warm);
    let shifts = [60, -60, 45, -45, 90, -90];
    let frames = generate_scroll_sequence(&spec, &shifts).unwrap();
    let mut state = UsageLockState::new(lock(30));
    for w in frames.windows(2) {
        state.update(&w[0], &w[1]).unwrap();
    }
    assert_eq!(state.accumulated_px, 390);
    assert_eq!(state.scroll_events, 13);
}

#[test]
fn usage_lock_rejects_mismatched_frames() {
    let a = Frame::solid(0, 10, 10, Rgba::WHITE).unwrap();
    let b = Frame::solid(1, 10, 12, Rgba::WHITE).unwrap();
    assert!(usage_lock_update(&UsageLockState::new(lock(5)), &a, &b).is_err());
}

#[test]
fn session_veils_every_frame_once_the_ramp_starts() {
    let spec = ScreenSpec::random(79, Layout::Feed, Theme::Light);
    let frames = generate_scroll_sequence(&spec, &[40, 40, 40, 0, 0]).unwrap();
    let cfg = UsageLockConfig {
        event_px: Some(40),
        s0: 1,
        s1: 5,
        ..UsageLockConfig::default()
    };
    let mut session = Session::new(Pipeline::new(), Some(cfg));
    let veils: Vec<Option<f32>> = frames
        .iter()
        .map(|f| {
            let plan = session.step(f).plan;
            plan.ops.iter().find_map(|o| match o.kind {
                OpKind::Veil { alpha, .. } => Some(alpha),
                _ => None,
            })
        })
        .collect();
    assert_eq!(
        veils,
        [None, None, Some(0.225), Some(0.45), Some(0.45), Some(0.45)]
    );
    assert_eq!(session.usage_lock().unwrap().scroll_events, 3);
    assert_eq!(session.state().frames_seen, frames.len() as u64);

    // A new frame size restarts tracking but keeps the count.
    let small = Frame::solid(99, 100, 100, Rgba::WHITE).unwrap();
    let plan = session.step(&small).plan;
    assert_eq!(plan.ops.len(), 1);
    assert_eq!(session.usage_lock().unwrap().scroll_events, 3);
}

#[test]
fn session_state_holds_only_the_current_frame_text() {
    let lex = Lexicon::parse("vorpax 0.9").unwrap();
    let mut p = Pipeline::new();
    p.push(hate_filter(lex, 0.5).unwrap()).unwrap();
    let mut session = Session::new(p, None);
    let (f, _) = generate_screen(&ScreenSpec::random(5, Layout::Feed, Theme::Light)).unwrap();
    session.step(&f);
    assert!(!session.state().text_boxes.is_empty());
    session.step(&Frame::solid(1, 360, 640, Rgba::WHITE).unwrap());
    assert!(session.state().text_boxes.is_empty());
}

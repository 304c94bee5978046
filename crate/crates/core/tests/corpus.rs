use screenveil::corpus::{
    generate_screen, generate_scroll_sequence, Element, Layout, ScreenSpec, Theme,
};
use screenveil::hooks::{detect_text_regions, recognize_text};
use screenveil::imaging::{detect_scroll, to_gray, ScrollParams};

#[test]
fn hello_reads_back_from_its_truth_rect() {
    let pal = Theme::Light.palette();
    let spec = ScreenSpec::blank(1, Layout::Feed, Theme::Light, 360, 240).with(
        40,
        100,
        Element::TextLine {
            text: "HELLO".into(),
            scale: 3,
            color: pal.text,
        },
    );
    let (f, truth) = generate_screen(&spec).unwrap();
    let gray = to_gray(&f);
    let (ink, text) = truth.text_lines()[0];
    assert_eq!(text, "HELLO");
    assert_eq!(recognize_text(&gray, ink).unwrap().text, "HELLO");
    assert_eq!(
        recognize_text(&gray, truth.entries[0].rect).unwrap().text,
        "HELLO"
    );

    let regions = detect_text_regions(&gray);
    assert_eq!(regions.len(), 1);
    assert!(regions[0].contains_region(&ink) && regions[0].iou(&ink) >= 0.9);
}

#[test]
fn every_line_of_a_screen_is_found_in_order() {
    for seed in 0..6 {
        let (f, truth) =
            generate_screen(&ScreenSpec::random(seed, Layout::Settings, Theme::Warm)).unwrap();
        let gray = to_gray(&f);
        let found = detect_text_regions(&gray);
        let want = truth.text_lines();
        let mut last = None;
        for (ink, text) in want {
            let i = found
                .iter()
                .position(|r| r.iou(&ink) >= 0.9)
                .unwrap_or_else(|| panic!("{text:?} not found"));
            assert!(last.is_none_or(|l| i > l), "{text:?} out of order");
            last = Some(i);
            assert_eq!(recognize_text(&gray, found[i]).unwrap().text, text);
        }
    }
}

#[test]
fn planted_shift_is_detected() {
    for (seed, theme) in [(1, Theme::Light), (2, Theme::Warm), (3, Theme::Browser)] {
        let spec = ScreenSpec::random(seed, Layout::Feed, theme);
        let frames = generate_scroll_sequence(&spec, &[37, -37]).unwrap();
        assert_eq!(
            detect_scroll(&frames[0], &frames[1], ScrollParams::default()).unwrap(),
            Some(37)
        );
        assert_eq!(
            detect_scroll(&frames[1], &frames[2], ScrollParams::default()).unwrap(),
            Some(-37)
        );
        assert_eq!(frames[0], frames[2].with_id(0, 0));
    }
    let single =
        generate_scroll_sequence(&ScreenSpec::random(4, Layout::Feed, Theme::Light), &[]).unwrap();
    assert_eq!(single.len(), 1);
}

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use screenveil::corpus::{canonical_mask, generate_screen, ElementKind, Layout, ScreenSpec, Theme};
use screenveil::io::{load_frame, save_frame};
use screenveil::net::{decode_message, ByeCode, Client, Hello, Message};
use screenveil_cli::config::PipelineConfig;
use screenveil_cli::manifest::CorpusManifest;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_screenveil"))
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn budget_prints_the_worked_example() {
    let (code, out, _) = run(&[
        "budget",
        "--bandwidth",
        "250e6",
        "--image-bits",
        "8192",
        "--model-ms",
        "5",
    ]);
    assert_eq!(code, 0);
    assert!(
        out.contains("one_way_ms: 0.033\n")
            && out.contains("total_ms: 5.07\n")
            && out.contains("max_fps: 197\n"),
        "{out}"
    );
    for (fps, n) in [("5", "40"), ("25", "8")] {
        let (code, out, _) = run(&[
            "budget",
            "--bandwidth",
            "250e6",
            "--image-bits",
            "8192",
            "--model-ms",
            "5",
            "--target-fps",
            fps,
        ]);
        assert_eq!(code, 0);
        assert!(
            out.contains(&format!("max_models_at_target: {n} ")),
            "{out}"
        );
    }
}

#[test]
fn bad_numbers_exit_3() {
    for args in [
        [
            "budget",
            "--bandwidth",
            "0",
            "--image-bits",
            "8192",
            "--model-ms",
            "5",
        ],
        [
            "budget",
            "--bandwidth",
            "fast",
            "--image-bits",
            "8192",
            "--model-ms",
            "5",
        ],
        [
            "budget",
            "--bandwidth",
            "1e6",
            "--image-bits",
            "8192",
            "--model-ms",
            "-1",
        ],
    ] {
        let (code, _, err) = run(&args);
        assert_eq!(code, 3, "{args:?}: {err}");
    }
}

#[test]
fn input_and_config_errors_have_distinct_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let cfg = assets().join("pipeline.toml");
    let cfg = cfg.to_str().unwrap();
    let empty = t.join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = t.join("out");
    let out = out.to_str().unwrap();
    assert_eq!(
        run(&[
            "run",
            "--input",
            empty.to_str().unwrap(),
            "--config",
            cfg,
            "--out",
            out
        ])
        .0,
        2
    );
    assert_eq!(
        run(&[
            "run",
            "--input",
            "/no/such/dir",
            "--config",
            cfg,
            "--out",
            out
        ])
        .0,
        2
    );

    let frames = t.join("frames");
    std::fs::create_dir(&frames).unwrap();
    std::fs::write(frames.join("0001.png"), b"not a png").unwrap();
    assert_eq!(
        run(&[
            "run",
            "--input",
            frames.to_str().unwrap(),
            "--config",
            cfg,
            "--out",
            out
        ])
        .0,
        2
    );

    let (f, _) = generate_screen(&ScreenSpec::random(1, Layout::Feed, Theme::Light)).unwrap();
    save_frame(&f, &frames.join("0001.png")).unwrap();
    let bad = t.join("bad.toml");
    std::fs::write(&bad, "schema = \"screenveil.pipeline/1\"\n[[intervention]]\nkind = \"demetrify\"\nmasks = \"nowhere\"\n")
        .unwrap();
    assert_eq!(
        run(&[
            "run",
            "--input",
            frames.to_str().unwrap(),
            "--config",
            bad.to_str().unwrap(),
            "--out",
            out
        ])
        .0,
        3
    );
    assert_eq!(
        run(&[
            "run",
            "--input",
            frames.to_str().unwrap(),
            "--config",
            "/no/config.toml",
            "--out",
            out
        ])
        .0,
        3
    );
}

#[test]
fn help_documents_every_flag() {
    for (cmd, flags) in [
        ("run", &["--input", "--config", "--out"][..]),
        ("serve", &["--listen", "--config"]),
        ("corpus", &["--manifest", "--out"]),
        (
            "budget",
            &["--bandwidth", "--image-bits", "--model-ms", "--target-fps"],
        ),
    ] {
        let (code, out, _) = run(&[cmd, "--help"]);
        assert_eq!(code, 0);
        for f in flags {
            assert!(out.contains(f), "{cmd} --help lacks {f}");
        }
    }
}

#[test]
fn shipped_config_normalizes_to_a_fixed_point() {
    let text = std::fs::read_to_string(assets().join("pipeline.toml")).unwrap();
    let once = PipelineConfig::parse(&text).unwrap().to_toml();
    let twice = PipelineConfig::parse(&once).unwrap().to_toml();
    assert_eq!(once, twice);
    let (cfg, rt) = screenveil_cli::config::load(&assets().join("pipeline.toml")).unwrap();
    assert_eq!(cfg.interventions.len(), 5);
    assert_eq!(
        rt.names(),
        [
            "occlude_elements",
            "demetrify",
            "hate_filter",
            "moderate_media",
            "usage_lock"
        ]
    );
}

#[test]
fn committed_masks_match_the_manifest() {
    let text = std::fs::read_to_string(assets().join("corpus.toml")).unwrap();
    let m = CorpusManifest::parse(&text).unwrap();
    assert!(!m.masks.is_empty());
    for k in &m.masks {
        let kind = ElementKind::parse(&k.element).unwrap();
        let want = canonical_mask(kind, Theme::parse(&k.theme).unwrap())
            .unwrap()
            .to_frame(0, 0);
        let got = load_frame(&assets().join(&k.path), 0, 0).unwrap();
        assert_eq!(got, want, "{}", k.path.display());
    }
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    let masks = assets().join("masks");
    let text = format!(
        "schema = \"screenveil.pipeline/1\"\n{}",
        body.replace("MASKS", masks.to_str().unwrap())
    );
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn demetrified_feed_keeps_no_metrics_pixels() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = tmp.path().join("frames");
    std::fs::create_dir(&frames).unwrap();
    let mut truths = Vec::new();
    for (i, seed) in (60..66).enumerate() {
        let theme = if i % 2 == 0 {
            Theme::Light
        } else {
            Theme::Browser
        };
        let (f, truth) = generate_screen(&ScreenSpec::random(seed, Layout::Feed, theme)).unwrap();
        save_frame(&f, &frames.join(format!("{i:04}.png"))).unwrap();
        truths.push((theme, truth));
    }
    let cfg = write_config(
        tmp.path(),
        "[[intervention]]\nkind = \"demetrify\"\nmasks = \"MASKS/metrics\"\n",
    );
    let out = tmp.path().join("out");
    let s = screenveil_cli::commands::cmd_run(&frames, &cfg, &out).unwrap();
    assert_eq!(s.frames, 6);
    for (i, (theme, truth)) in truths.iter().enumerate() {
        let shown = load_frame(&out.join("frames").join(format!("{i:04}.png")), 0, 0).unwrap();
        let page = theme.palette().page;
        let mut bars = 0;
        for e in truth.of_kind(ElementKind::MetricsBar) {
            bars += 1;
            for y in e.rect.y..e.rect.bottom() {
                for x in e.rect.x..e.rect.right() {
                    assert_eq!(
                        shown.rgba_at(x, y),
                        page,
                        "frame {i} bar {:?} at ({x},{y})",
                        e.rect
                    );
                }
            }
        }
        assert!(bars > 0);
    }
    let csv = std::fs::read_to_string(out.join("latency.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("frame_id,file,pipeline_us,demetrify_us,skipped\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    let manifest = tmp.path().join("m.toml");
    std::fs::write(
        &manifest,
        "schema = \"screenveil.corpus/1\"\n[[sequence]]\nname = \"s\"\nseed = 3\nlayout = \"feed\"\ntheme = \"warm\"\nshifts = [50, 70, 90, 60]\n",
    )
    .unwrap();
    assert_eq!(
        run(&[
            "corpus",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            corpus.to_str().unwrap()
        ])
        .0,
        0
    );
    let list = tmp.path().join("frames.txt");
    std::fs::write(&list, "# scroll\ncorpus/sequences/s/0000.png\ncorpus/sequences/s/0001.png\ncorpus/sequences/s/0002.png\n")
        .unwrap();
    let cfg = assets().join("pipeline.toml");
    let outs: Vec<PathBuf> = (0..2).map(|k| tmp.path().join(format!("out{k}"))).collect();
    for o in &outs {
        let (code, _, err) = run(&[
            "run",
            "--input",
            list.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            o.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    for sub in ["frames", "plans"] {
        let mut names: Vec<_> = std::fs::read_dir(outs[0].join(sub))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert_eq!(names.len(), 3);
        for n in names {
            let a = std::fs::read(outs[0].join(sub).join(&n)).unwrap();
            let b = std::fs::read(outs[1].join(sub).join(&n)).unwrap();
            assert!(a == b, "{sub}/{n:?} differs");
        }
    }
}

#[test]
fn serve_answers_frames_and_stops_on_sigterm() {
    let mut child = bin()
        .args([
            "serve",
            "--listen",
            "127.0.0.1:0",
            "--config",
            assets().join("pipeline.toml").to_str().unwrap(),
        ])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on ")
        .unwrap()
        .to_string();

    let mut bad = TcpStream::connect(&addr).unwrap();
    bad.set_read_timeout(Some(Duration::from_secs(20))).unwrap();
    bad.write_all(b"HELLO, server").unwrap();
    let mut reply = vec![0u8; 256];
    let n = std::io::Read::read(&mut bad, &mut reply).unwrap();
    assert!(
        matches!(decode_message(&reply[..n]).unwrap().0, Message::Bye(b) if b.code == ByeCode::ProtocolError)
    );

    let hello = Hello {
        max_width: 360,
        max_height: 640,
        compression: 0,
        interventions: vec![],
    };
    let mut c = Client::connect(&addr, &hello).unwrap();
    c.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
    for id in 0..10u64 {
        let (f, _) = generate_screen(&ScreenSpec::random(id, Layout::Mixed, Theme::Light)).unwrap();
        c.send_frame(&f.with_id(id, id * 50_000)).unwrap();
        match c.recv().unwrap() {
            Message::Overlay(p) => assert_eq!(p.frame_id, id),
            other => panic!("{other:?}"),
        }
    }

    let status = Command::new("kill")
        .args(["-TERM", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(matches!(c.recv().unwrap(), Message::Bye(b) if b.code == ByeCode::Shutdown));
    assert_eq!(child.wait().unwrap().code(), Some(0));
}

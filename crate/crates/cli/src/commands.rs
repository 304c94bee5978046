//! The four subcommands as library functions, so tests can drive them
//! without spawning a process.

use std::fmt::Write as _;
use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use screenveil::composite;
use screenveil::corpus::{canonical_mask, generate_screen, generate_scroll_sequence, ScreenSpec};
use screenveil::io::{load_frame, save_frame};
use screenveil::net::{
    encode_overlay, latency_budget, serve, BudgetInput, BudgetReport, ServerConfig, SessionFactory,
};

use crate::config;
use crate::manifest::{self, CorpusManifest};
use crate::CliError;

/// Timestamps given to offline frames: one every 50 ms.
pub const FRAME_INTERVAL_US: u64 = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub frames: usize,
    /// Sum of pipeline wall time over all frames.
    pub pipeline_us: u64,
}

impl RunSummary {
    pub fn mean_ms(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.pipeline_us as f64 / self.frames as f64 / 1000.0
        }
    }
}

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

/// Frame files named by `input`: the `.png` files of a directory in file
/// name order, or the lines of a list file (paths relative to the list,
/// `#` starts a comment).
pub fn frame_paths(input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let meta = fs::metadata(input)
        .map_err(|e| input_err(format!("cannot read {}: {e}", input.display())))?;
    let paths = if meta.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(input)
            .map_err(|e| input_err(format!("cannot read {}: {e}", input.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
            .collect();
        v.sort();
        v
    } else {
        let text = fs::read_to_string(input)
            .map_err(|e| input_err(format!("cannot read {}: {e}", input.display())))?;
        let base = input.parent().unwrap_or(Path::new("."));
        text.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| base.join(l))
            .collect()
    };
    if paths.is_empty() {
        return Err(input_err(format!("no frames found in {}", input.display())));
    }
    Ok(paths)
}

/// Runs every input frame through one session and writes composited
/// frames, encoded overlay plans and `latency.csv` under `out`.
pub fn cmd_run(input: &Path, config_path: &Path, out: &Path) -> Result<RunSummary, CliError> {
    let paths = frame_paths(input)?;
    let (_, runtime) = config::load(config_path)?;
    let mut session = runtime.session(&[]).map_err(CliError::Config)?;
    let hooks: Vec<String> = runtime
        .pipeline
        .bindings()
        .iter()
        .map(|b| b.name.clone())
        .collect();

    let (frames_dir, plans_dir) = (out.join("frames"), out.join("plans"));
    for d in [&frames_dir, &plans_dir] {
        fs::create_dir_all(d).map_err(|e| write_err(d, e))?;
    }
    let mut csv = String::from("frame_id,file,pipeline_us");
    for h in &hooks {
        let _ = write!(csv, ",{h}_us");
    }
    csv.push_str(",skipped\n");

    let mut summary = RunSummary {
        frames: 0,
        pipeline_us: 0,
    };
    for (i, path) in paths.iter().enumerate() {
        let id = i as u64;
        let frame =
            load_frame(path, id, id * FRAME_INTERVAL_US).map_err(|e| input_err(e.to_string()))?;
        let result = session.step(&frame);
        let shown =
            composite(&frame, &result.plan).map_err(|e| CliError::Runtime(e.to_string()))?;

        let stem = path
            .file_stem()
            .map_or_else(|| format!("{i:05}"), |s| s.to_string_lossy().into_owned());
        let png = frames_dir.join(format!("{stem}.png"));
        save_frame(&shown, &png).map_err(|e| write_err(&png, e))?;
        let plan = plans_dir.join(format!("{stem}.overlay"));
        fs::write(&plan, encode_overlay(&result.plan)).map_err(|e| write_err(&plan, e))?;

        let rec = &result.record;
        let us = rec.t_plan_ready_us.saturating_sub(rec.t_receive_us);
        summary.frames += 1;
        summary.pipeline_us += us;
        let _ = write!(csv, "{id},{},{us}", path.display());
        for h in &hooks {
            let _ = write!(csv, ",{}", rec.per_hook_us.get(h).copied().unwrap_or(0));
        }
        let skipped: Vec<&str> = rec.skipped.keys().map(String::as_str).collect();
        let _ = writeln!(csv, ",{}", skipped.join(";"));
    }
    let report = out.join("latency.csv");
    fs::write(&report, csv).map_err(|e| write_err(&report, e))?;
    Ok(summary)
}

/// Serves the configured pipeline on `listener` until `shutdown` is set.
pub fn cmd_serve(
    listener: TcpListener,
    config_path: &Path,
    shutdown: Arc<AtomicBool>,
) -> Result<(), CliError> {
    let (_, runtime) = config::load(config_path)?;
    let runtime = Arc::new(runtime);
    let factory: SessionFactory = Arc::new(move |hello| runtime.session(&hello.interventions));
    serve(listener, factory, ServerConfig::default(), shutdown)
        .map_err(|e| CliError::Runtime(format!("server failed: {e}")))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusSummary {
    pub screens: usize,
    pub sequence_frames: usize,
    pub masks: usize,
}

/// Renders a corpus manifest under `out`: `screens/<name>.png` with a
/// `<name>.gt.txt` ground-truth sidecar, `sequences/<name>/NNNN.png`, and
/// each mask at its listed path.
pub fn cmd_corpus(manifest_path: &Path, out: &Path) -> Result<CorpusSummary, CliError> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", manifest_path.display())))?;
    let m = CorpusManifest::parse(&text)?;
    let mut summary = CorpusSummary::default();

    let screens = out.join("screens");
    fs::create_dir_all(&screens).map_err(|e| write_err(&screens, e))?;
    for (name, spec) in m.screen_specs()? {
        let (frame, truth) =
            generate_screen(&spec).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        let png = screens.join(format!("{name}.png"));
        save_frame(&frame, &png).map_err(|e| write_err(&png, e))?;
        let gt = screens.join(format!("{name}.gt.txt"));
        fs::write(&gt, truth.to_sidecar()).map_err(|e| write_err(&gt, e))?;
        summary.screens += 1;
    }

    for s in &m.sequences {
        let spec = ScreenSpec::random(
            s.seed,
            manifest::layout(&s.layout)?,
            manifest::theme(&s.theme)?,
        );
        let frames = generate_scroll_sequence(&spec, &s.shifts)
            .map_err(|e| CliError::Config(format!("{}: {e}", s.name)))?;
        let dir = out.join("sequences").join(&s.name);
        fs::create_dir_all(&dir).map_err(|e| write_err(&dir, e))?;
        for (i, f) in frames.iter().enumerate() {
            let png = dir.join(format!("{i:04}.png"));
            save_frame(f, &png).map_err(|e| write_err(&png, e))?;
        }
        let shifts: Vec<String> = s.shifts.iter().map(i32::to_string).collect();
        let list = dir.join("shifts.txt");
        fs::write(&list, shifts.join("\n") + "\n").map_err(|e| write_err(&list, e))?;
        summary.sequence_frames += frames.len();
    }

    for k in &m.masks {
        let (kind, theme) = (manifest::element(&k.element)?, manifest::theme(&k.theme)?);
        let canvas = canonical_mask(kind, theme)
            .ok_or_else(|| CliError::Config(format!("{} has no canonical mask", k.element)))?;
        let path = out.join(&k.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| write_err(parent, e))?;
        }
        save_frame(&canvas.to_frame(0, 0), &path).map_err(|e| write_err(&path, e))?;
        summary.masks += 1;
    }
    Ok(summary)
}

pub fn cmd_budget(input: &BudgetInput) -> Result<BudgetReport, CliError> {
    latency_budget(input).map_err(|e| CliError::Numeric(e.to_string()))
}

/// Report lines: one-way time to 3 decimals, total to 2, the rest exact.
pub fn format_budget(report: &BudgetReport, target_fps: Option<f64>) -> String {
    let mut s = format!(
        "one_way_ms: {:.3}\ntotal_ms: {:.2}\nmax_fps: {}\n",
        report.one_way_ms, report.total_ms, report.max_fps
    );
    if let (Some(fps), Some(n), Some(m)) = (
        target_fps,
        report.max_models_at_target,
        report.max_models_with_transfer,
    ) {
        let _ = writeln!(s, "max_models_at_target: {n} (at {fps} fps)");
        let _ = writeln!(s, "max_models_with_transfer: {m} (at {fps} fps)");
    }
    s
}

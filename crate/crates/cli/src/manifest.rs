//! Corpus manifests: which screens, scroll sequences and masks to render.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use screenveil::corpus::{ElementKind, Layout, ScreenSpec, Theme, DEFAULT_HEIGHT, DEFAULT_WIDTH};

use crate::CliError;

pub const SCHEMA: &str = "screenveil.corpus/1";

fn one() -> u32 {
    1
}

fn default_width() -> u32 {
    DEFAULT_WIDTH
}

fn default_height() -> u32 {
    DEFAULT_HEIGHT
}

/// `count` consecutive seeds starting at `seed`; with `count > 1` the
/// files are named `<name>_<seed>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenEntry {
    pub name: String,
    pub seed: u64,
    #[serde(default = "one")]
    pub count: u32,
    pub layout: String,
    pub theme: String,
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceEntry {
    pub name: String,
    pub seed: u64,
    pub layout: String,
    pub theme: String,
    pub shifts: Vec<i32>,
}

/// A canonical element crop written to `path` (relative to the output dir).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskEntry {
    pub element: String,
    pub theme: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub schema: String,
    #[serde(default, rename = "screen")]
    pub screens: Vec<ScreenEntry>,
    #[serde(default, rename = "sequence")]
    pub sequences: Vec<SequenceEntry>,
    #[serde(default, rename = "mask")]
    pub masks: Vec<MaskEntry>,
}

fn bad(msg: String) -> CliError {
    CliError::Config(msg)
}

pub fn layout(s: &str) -> Result<Layout, CliError> {
    Layout::parse(s).ok_or_else(|| bad(format!("unknown layout {s:?}")))
}

pub fn theme(s: &str) -> Result<Theme, CliError> {
    Theme::parse(s).ok_or_else(|| bad(format!("unknown theme {s:?}")))
}

pub fn element(s: &str) -> Result<ElementKind, CliError> {
    ElementKind::parse(s).ok_or_else(|| bad(format!("unknown element {s:?}")))
}

impl CorpusManifest {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let m: CorpusManifest = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        if m.schema != SCHEMA {
            return Err(bad(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                m.schema
            )));
        }
        for s in &m.screens {
            layout(&s.layout)?;
            theme(&s.theme)?;
            if s.count == 0 || s.width == 0 || s.height == 0 {
                return Err(bad(format!(
                    "screen {:?}: count, width and height must be positive",
                    s.name
                )));
            }
        }
        for s in &m.sequences {
            layout(&s.layout)?;
            theme(&s.theme)?;
        }
        for k in &m.masks {
            element(&k.element)?;
            theme(&k.theme)?;
        }
        Ok(m)
    }

    /// Every screen as `(file stem, spec)`, in manifest order.
    pub fn screen_specs(&self) -> Result<Vec<(String, ScreenSpec)>, CliError> {
        let mut out = Vec::new();
        for s in &self.screens {
            let (l, t) = (layout(&s.layout)?, theme(&s.theme)?);
            for k in 0..u64::from(s.count) {
                let seed = s.seed + k;
                let name = if s.count == 1 {
                    s.name.clone()
                } else {
                    format!("{}_{seed}", s.name)
                };
                out.push((
                    name,
                    ScreenSpec::random_sized(seed, l, t, s.width, s.height),
                ));
            }
        }
        Ok(out)
    }
}

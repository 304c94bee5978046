use std::collections::BTreeMap;
use std::path::Path;

use super::InterventionError;
use crate::hooks::TextClassifier;

/// Weighted terms; a line scores the largest weight among its tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, f64>,
}

fn config(msg: String) -> InterventionError {
    InterventionError::Config(msg)
}

impl Lexicon {
    pub fn new(
        entries: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self, InterventionError> {
        let mut map = BTreeMap::new();
        for (term, weight) in entries {
            if term.is_empty()
                || term.chars().any(char::is_whitespace)
                || term != term.to_lowercase()
            {
                return Err(config(format!(
                    "lexicon term {term:?} must be lowercase without spaces"
                )));
            }
            if !(weight > 0.0 && weight <= 1.0) {
                return Err(config(format!(
                    "lexicon weight {weight} for {term:?} is outside (0, 1]"
                )));
            }
            map.insert(term, weight);
        }
        if map.is_empty() {
            return Err(config("lexicon is empty".into()));
        }
        Ok(Lexicon { entries: map })
    }

    /// One `term weight` pair per line; `#` starts a comment. Terms are
    /// lowercased.
    pub fn parse(text: &str) -> Result<Self, InterventionError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(term), Some(weight), None) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(config(format!(
                    "lexicon line {}: expected `term weight`",
                    i + 1
                )));
            };
            let weight: f64 = weight
                .parse()
                .map_err(|_| config(format!("lexicon line {}: bad weight {weight:?}", i + 1)))?;
            entries.push((term.to_lowercase(), weight));
        }
        Lexicon::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, InterventionError> {
        let text = std::fs::read_to_string(path).map_err(|source| InterventionError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Lexicon::parse(&text)
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    /// Maximal runs of ASCII letters and digits, lowercased.
    pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
        text.split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_ascii_lowercase)
    }

    pub fn score(&self, text: &str) -> f64 {
        Lexicon::tokens(text)
            .filter_map(|t| self.entries.get(&t).copied())
            .fold(0.0, f64::max)
    }
}

impl TextClassifier for Lexicon {
    fn name(&self) -> &str {
        "lexicon"
    }

    fn score(&self, text: &str) -> f64 {
        Lexicon::score(self, text)
    }
}

//! Mapping from dataset-specific query spellings to canonical query keys.
//!
//! The text format is one entry per line:
//!
//! ```text
//! # comment
//! Bündnis90/Die Grünen = grüne
//! die linke = dielinke
//! cdu = MISSING
//! ```
//!
//! `key = MISSING` records that a canonical key is known to be absent from
//! the suggestion log, so coverage reports can flag it instead of printing
//! an unexplained zero.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use thiserror::Error;

pub const MISSING_MARKER: &str = "MISSING";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AliasError {
    #[error("alias map line {line}: expected `raw = canonical`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("alias map line {line}: {raw:?} is already mapped to {existing:?}")]
    Conflict {
        line: usize,
        raw: String,
        existing: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryAliasMap {
    aliases: BTreeMap<String, String>,
    missing: BTreeSet<String>,
}

impl QueryAliasMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, raw: impl Into<String>, canonical: impl Into<String>) {
        self.aliases.insert(raw.into(), canonical.into());
    }

    pub fn mark_missing(&mut self, canonical: impl Into<String>) {
        self.missing.insert(canonical.into());
    }

    /// Canonical key for a raw query. Unmapped queries are their own key.
    /// The lookup is applied once; mappings do not chain.
    pub fn canonical<'a>(&'a self, raw: &'a str) -> &'a str {
        let raw = raw.trim();
        self.aliases.get(raw).map(String::as_str).unwrap_or(raw)
    }

    pub fn is_missing(&self, canonical: &str) -> bool {
        self.missing.contains(canonical)
    }

    pub fn missing(&self) -> impl Iterator<Item = &str> {
        self.missing.iter().map(String::as_str)
    }

    /// Every canonical key the map knows about, including MISSING markers.
    pub fn configured_keys(&self) -> BTreeSet<&str> {
        self.aliases
            .values()
            .map(String::as_str)
            .chain(self.missing())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.aliases.is_empty() && self.missing.is_empty()
    }
}

impl FromStr for QueryAliasMap {
    type Err = AliasError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut map = Self::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let syntax = || AliasError::Syntax {
                line,
                text: raw_line.to_string(),
            };
            let (lhs, rhs) = trimmed.rsplit_once('=').ok_or_else(syntax)?;
            let (lhs, rhs) = (lhs.trim(), rhs.trim());
            if lhs.is_empty() || rhs.is_empty() {
                return Err(syntax());
            }
            if rhs == MISSING_MARKER {
                map.mark_missing(lhs);
                continue;
            }
            if let Some(existing) = map.aliases.get(lhs) {
                if existing != rhs {
                    return Err(AliasError::Conflict {
                        line,
                        raw: lhs.to_string(),
                        existing: existing.clone(),
                    });
                }
            }
            map.insert(lhs, rhs);
        }
        Ok(map)
    }
}

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// The ten distortion classes used by the public datasets.
pub const CANONICAL_LABELS: [&str; 10] = [
    "All-or-nothing_thinking",
    "Emotional_Reasoning",
    "Fortune-telling",
    "Labeling",
    "Magnification",
    "Mental_filter",
    "Mind_Reading",
    "Overgeneralization",
    "Personalization",
    "Should_statements",
];

/// A class name. Any file-name-safe string is accepted so models with other
/// class systems can be loaded; corpus ingestion only produces canonical labels.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(name: &str) -> Result<Self> {
        let bad = name.is_empty()
            || name.trim() != name
            || name.starts_with('.')
            || name.chars().any(|c| matches!(c, '/' | '\\' | '\t' | '\n' | '\r' | '\0'));
        if bad {
            return Err(Error::InvalidLabel(name.to_owned()));
        }
        Ok(Label(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn canonical() -> Vec<Label> {
        CANONICAL_LABELS.iter().map(|s| Label(Arc::from(*s))).collect()
    }

    /// Matches a free-form label string against the canonical set, ignoring
    /// case, spacing and punctuation. `"No Distortion"` and blanks map to `Ok(None)`.
    pub fn canonicalize(raw: &str) -> Result<Option<Label>, String> {
        let key = squash(raw);
        if key.is_empty() || key == "nodistortion" || key == "none" {
            return Ok(None);
        }
        CANONICAL_LABELS
            .iter()
            .find(|c| squash(c) == key)
            .map(|c| Some(Label(Arc::from(*c))))
            .ok_or_else(|| raw.to_owned())
    }
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&*self.0, f)
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::new(s)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Label::new(&s).map_err(serde::de::Error::custom)
    }
}

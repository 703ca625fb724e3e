//! Answer normalization.
//!
//! Every answer, machine or human, is reduced to an [`AnswerBag`]: a
//! deduplicated, sorted set of lowercase tokens. Multi-word compounds written
//! with underscores (`night_stand`) stay atomic so they can be looked up in a
//! taxonomy as a single concept.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Characters that separate terms inside one answer string.
fn is_separator(c: char) -> bool {
    c == ',' || c == ';' || c.is_whitespace()
}

/// Normalized set of answer tokens.
///
/// Tokens are non-empty, lowercase, contain no whitespace and no `,`/`;`
/// separators. Iteration order is lexicographic, which keeps every product
/// over a bag evaluated in the same order regardless of how the answer was
/// written.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AnswerBag {
    tokens: BTreeSet<String>,
}

impl AnswerBag {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> + Clone + '_ {
        self.tokens.iter().map(String::as_str)
    }
}

impl fmt::Display for AnswerBag {
    /// Canonical rendering: tokens in order, joined by `", "`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, tok) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(tok)?;
        }
        Ok(())
    }
}

impl<'a> FromIterator<&'a str> for AnswerBag {
    /// Each item is normalized as if it were its own answer string.
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        let mut tokens = BTreeSet::new();
        for piece in iter {
            tokens.extend(normalize(piece).tokens);
        }
        AnswerBag { tokens }
    }
}

impl<'a> IntoIterator for &'a AnswerBag {
    type Item = &'a String;
    type IntoIter = std::collections::btree_set::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

impl Serialize for AnswerBag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AnswerBag {
    /// Accepts either a raw answer string or a list of terms.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Terms(Vec<String>),
        }
        Ok(match Raw::deserialize(deserializer)? {
            Raw::Text(s) => normalize(&s),
            Raw::Terms(v) => v.iter().map(String::as_str).collect(),
        })
    }
}

/// Normalizes one raw answer string into a bag of tokens.
///
/// Lowercases, splits on commas, semicolons and whitespace runs, trims
/// non-alphanumeric characters from both ends of each piece and drops
/// whatever is left empty. Inner hyphens, underscores and digits survive.
pub fn normalize(raw: &str) -> AnswerBag {
    let lowered = raw.to_lowercase();
    let tokens = lowered
        .split(is_separator)
        .map(|piece| piece.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|piece| !piece.is_empty())
        .map(str::to_owned)
        .collect();
    AnswerBag { tokens }
}

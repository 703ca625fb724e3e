//! Token-level membership measures.
//!
//! A measure scores how well one answer token counts as another, in `[0, 1]`.
//! Three kinds are available: exact string match, Wu–Palmer similarity over a
//! [`Taxonomy`], and clamped cosine similarity over an [`EmbeddingTable`].
//! Tokens the active resource does not know fall back to an [`OovPolicy`].

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{self, SenseMap, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Exact,
    #[serde(rename = "wup")]
    TaxonomyWup,
    #[serde(rename = "embedding")]
    EmbeddingCosine,
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::Exact => "exact",
            MeasureKind::TaxonomyWup => "wup",
            MeasureKind::EmbeddingCosine => "embedding",
        })
    }
}

/// What to do with a token the active resource does not cover.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OovPolicy {
    /// 1 if the two tokens are identical strings, else 0.
    #[default]
    ExactFallback,
    /// Always 0.
    Zero,
}

impl OovPolicy {
    pub fn score(self, a: &str, t: &str) -> f64 {
        match self {
            OovPolicy::ExactFallback if a == t => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for OovPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OovPolicy::ExactFallback => "exact-fallback",
            OovPolicy::Zero => "zero",
        })
    }
}

#[derive(Debug, Error)]
pub enum MembershipError {
    #[error("threshold must lie in [0, 1], got {0}")]
    Threshold(f64),
    #[error("down-weight must lie in [0, 1], got {0}")]
    DownWeight(f64),
    #[error("measure {0} needs a {1}")]
    MissingResource(MeasureKind, &'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipConfig {
    pub kind: MeasureKind,
    pub oov_policy: OovPolicy,
    /// Raw scores below this are multiplied by `down_weight`. 0 disables.
    pub threshold: f64,
    pub down_weight: f64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        MembershipConfig {
            kind: MeasureKind::Exact,
            oov_policy: OovPolicy::ExactFallback,
            threshold: 0.0,
            down_weight: 0.1,
        }
    }
}

impl MembershipConfig {
    pub fn new(kind: MeasureKind) -> Self {
        MembershipConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn with_oov(mut self, policy: OovPolicy) -> Self {
        self.oov_policy = policy;
        self
    }

    pub fn with_threshold(mut self, threshold: f64, down_weight: f64) -> Self {
        self.threshold = threshold;
        self.down_weight = down_weight;
        self
    }

    pub fn validate(&self) -> Result<(), MembershipError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(MembershipError::Threshold(self.threshold));
        }
        if !(0.0..=1.0).contains(&self.down_weight) {
            return Err(MembershipError::DownWeight(self.down_weight));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected {expected} components, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse component {text:?}")]
    Number { line: usize, text: String },
    #[error("line {line}: zero vector for {token:?}")]
    ZeroVector { line: usize, token: String },
    #[error("line {line}: duplicate token {token:?}")]
    DuplicateToken { line: usize, token: String },
    #[error("header declares {declared} vectors, file has {found}")]
    Count { declared: usize, found: usize },
    #[error("no vectors")]
    Empty,
}

/// Word vectors of one fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    norms: Vec<f64>,
}

impl EmbeddingTable {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        let i = *self.index.get(token)?;
        Some(&self.data[i * self.dimension..(i + 1) * self.dimension])
    }

    /// Cosine similarity, or `None` if either token is missing.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (ia, ib) = (*self.index.get(a)?, *self.index.get(b)?);
        let (va, vb) = (self.vector(a)?, self.vector(b)?);
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        Some(dot / (self.norms[ia] * self.norms[ib]))
    }
}

/// Reads whitespace-separated word vectors, one per line. A leading
/// `<count> <dimension>` header is recognised and checked.
pub fn load_embeddings<R: BufRead>(source: R) -> Result<EmbeddingTable, EmbeddingError> {
    let mut header: Option<(usize, usize)> = None;
    let mut dimension: Option<usize> = None;
    let mut index = HashMap::new();
    let mut data = Vec::new();
    let mut norms = Vec::new();
    let mut first = true;

    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let rest: Vec<&str> = fields.collect();

        if std::mem::take(&mut first) {
            if let [dim] = rest.as_slice() {
                if let (Ok(count), Ok(dim)) = (token.parse::<usize>(), dim.parse::<usize>()) {
                    if dim > 0 {
                        header = Some((count, dim));
                        dimension = Some(dim);
                        continue;
                    }
                }
            }
        }

        let expected = *dimension.get_or_insert(rest.len());
        if rest.len() != expected || expected == 0 {
            return Err(EmbeddingError::Dimension {
                line: lineno,
                expected,
                found: rest.len(),
            });
        }
        let start = data.len();
        for text in rest {
            match text.parse::<f64>() {
                Ok(x) if x.is_finite() => data.push(x),
                _ => {
                    return Err(EmbeddingError::Number {
                        line: lineno,
                        text: text.to_owned(),
                    })
                }
            }
        }
        let norm = data[start..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(EmbeddingError::ZeroVector {
                line: lineno,
                token: token.to_owned(),
            });
        }
        match index.entry(token.to_owned()) {
            Entry::Occupied(_) => {
                return Err(EmbeddingError::DuplicateToken {
                    line: lineno,
                    token: token.to_owned(),
                })
            }
            Entry::Vacant(e) => {
                e.insert(norms.len());
            }
        }
        norms.push(norm);
    }

    let dimension = match dimension {
        Some(d) if !norms.is_empty() => d,
        _ => return Err(EmbeddingError::Empty),
    };
    if let Some((declared, _)) = header {
        if declared != norms.len() {
            return Err(EmbeddingError::Count {
                declared,
                found: norms.len(),
            });
        }
    }
    Ok(EmbeddingTable {
        dimension,
        index,
        data,
        norms,
    })
}

/// Anything usable as the membership measure of the scoring kernel.
pub trait Measure {
    fn mu(&self, a: &str, t: &str) -> f64;
}

impl<F> Measure for F
where
    F: Fn(&str, &str) -> f64,
{
    fn mu(&self, a: &str, t: &str) -> f64 {
        self(a, t)
    }
}

/// Backing data for the non-exact measures.
#[derive(Debug, Clone)]
pub enum Resource {
    None,
    Taxonomy {
        taxonomy: Arc<Taxonomy>,
        senses: Arc<SenseMap>,
    },
    Embeddings(Arc<EmbeddingTable>),
}

/// A configured measure with its resource attached.
#[derive(Debug, Clone)]
pub struct Membership {
    config: MembershipConfig,
    resource: Resource,
}

impl Membership {
    pub fn new(config: MembershipConfig, resource: Resource) -> Result<Self, MembershipError> {
        config.validate()?;
        match (config.kind, &resource) {
            (MeasureKind::TaxonomyWup, Resource::Taxonomy { .. })
            | (MeasureKind::EmbeddingCosine, Resource::Embeddings(_))
            | (MeasureKind::Exact, _) => Ok(Membership { config, resource }),
            (MeasureKind::TaxonomyWup, _) => {
                Err(MembershipError::MissingResource(config.kind, "taxonomy"))
            }
            (MeasureKind::EmbeddingCosine, _) => Err(MembershipError::MissingResource(
                config.kind,
                "embedding table",
            )),
        }
    }

    pub fn exact() -> Self {
        Membership {
            config: MembershipConfig::default(),
            resource: Resource::None,
        }
    }

    pub fn config(&self) -> &MembershipConfig {
        &self.config
    }

    /// Whether the active resource knows `token`. Exact matching covers
    /// everything.
    pub fn covers(&self, token: &str) -> bool {
        match (self.config.kind, &self.resource) {
            (MeasureKind::TaxonomyWup, Resource::Taxonomy { senses, .. }) => senses.contains(token),
            (MeasureKind::EmbeddingCosine, Resource::Embeddings(table)) => table.contains(token),
            _ => true,
        }
    }

    /// Score before thresholding.
    pub fn raw(&self, a: &str, t: &str) -> f64 {
        match (self.config.kind, &self.resource) {
            (MeasureKind::TaxonomyWup, Resource::Taxonomy { taxonomy, senses }) => {
                taxonomy::word_similarity(taxonomy, senses, a, t, self.config.oov_policy)
            }
            (MeasureKind::EmbeddingCosine, Resource::Embeddings(table)) => {
                if a == t && table.contains(a) {
                    return 1.0;
                }
                match table.cosine(a, t) {
                    Some(c) => c.clamp(0.0, 1.0),
                    None => self.config.oov_policy.score(a, t),
                }
            }
            _ => OovPolicy::ExactFallback.score(a, t),
        }
    }
}

impl Measure for Membership {
    fn mu(&self, a: &str, t: &str) -> f64 {
        let raw = self.raw(a, t);
        if self.config.threshold > 0.0 && raw < self.config.threshold {
            raw * self.config.down_weight
        } else {
            raw
        }
    }
}

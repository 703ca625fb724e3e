//! WUPS and its multi-annotator generalizations.
//!
//! For a machine answer `A` and one human answer `T`, both bags of tokens,
//!
//! ```text
//! wups(A, T) = min( ∏_{a∈A} max_{t∈T} μ(a,t),  ∏_{t∈T} max_{a∈A} μ(a,t) )
//! ```
//!
//! with the empty product equal to 1 and the empty max equal to 0. With
//! several human answers per question, the *interpretation* score takes the
//! best match and the *consensus* score the average. Corpus aggregates are
//! means over questions scaled to `[0, 100]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answers::AnswerBag;
use crate::dataset::{Pair, QARecord};
use crate::membership::Measure;
use crate::report::{fixed6, fixed6_seq};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("question has no human answers")]
    NoHumanAnswers,
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Single-interpretation score of a machine answer against one human answer.
pub fn wups_single<M: Measure + ?Sized>(answer: &AnswerBag, truth: &AnswerBag, mu: &M) -> f64 {
    let a: Vec<&str> = answer.iter().collect();
    let t: Vec<&str> = truth.iter().collect();
    let scores: Vec<f64> = a
        .iter()
        .flat_map(|x| t.iter().map(move |y| (x, y)))
        .map(|(x, y)| mu.mu(x, y))
        .collect();
    let at = |i: usize, j: usize| scores[i * t.len() + j];

    let forward: f64 = (0..a.len())
        .map(|i| (0..t.len()).map(|j| at(i, j)).fold(0.0, f64::max))
        .product();
    let backward: f64 = (0..t.len())
        .map(|j| (0..a.len()).map(|i| at(i, j)).fold(0.0, f64::max))
        .product();
    forward.min(backward)
}

/// Best score over the human answers.
pub fn interpretation_single<M: Measure + ?Sized>(
    answer: &AnswerBag,
    humans: &[AnswerBag],
    mu: &M,
) -> Result<f64, MetricsError> {
    if humans.is_empty() {
        return Err(MetricsError::NoHumanAnswers);
    }
    Ok(humans
        .iter()
        .map(|h| wups_single(answer, h, mu))
        .fold(0.0, f64::max))
}

/// Mean score over the human answers.
pub fn consensus_single<M: Measure + ?Sized>(
    answer: &AnswerBag,
    humans: &[AnswerBag],
    mu: &M,
) -> Result<f64, MetricsError> {
    if humans.is_empty() {
        return Err(MetricsError::NoHumanAnswers);
    }
    let scores: Vec<f64> = humans.iter().map(|h| wups_single(answer, h, mu)).collect();
    Ok(mean(&scores))
}

/// Sums in ascending order so the result depends only on the multiset of
/// values, not on their order.
fn ordered_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = xs.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Rounding can push the quotient a hair past the extremes; clamp it back so
/// the mean never exceeds the max.
fn mean(xs: &[f64]) -> f64 {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (ordered_sum(xs.iter().copied()) / xs.len() as f64).clamp(lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question_id: String,
    /// One entry per human answer, in annotation order.
    #[serde(serialize_with = "fixed6_seq")]
    pub wups_vs: Vec<f64>,
    #[serde(serialize_with = "fixed6")]
    pub interpretation: f64,
    #[serde(serialize_with = "fixed6")]
    pub consensus: f64,
    /// Set equality with the first human answer.
    pub exact_accuracy: u8,
}

impl QuestionScore {
    /// Score against the first human answer alone.
    pub fn wups(&self) -> f64 {
        self.wups_vs[0]
    }
}

pub fn score_question<M: Measure + ?Sized>(
    answer: &AnswerBag,
    truth: &QARecord,
    mu: &M,
) -> Result<QuestionScore, MetricsError> {
    let Some(first) = truth.human_answers.first() else {
        return Err(MetricsError::NoHumanAnswers);
    };
    let wups_vs: Vec<f64> = truth
        .human_answers
        .iter()
        .map(|h| wups_single(answer, h, mu))
        .collect();
    Ok(QuestionScore {
        question_id: truth.question_id.clone(),
        interpretation: wups_vs.iter().copied().fold(0.0, f64::max),
        consensus: mean(&wups_vs),
        exact_accuracy: u8::from(answer == first),
        wups_vs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub n_questions: usize,
    #[serde(serialize_with = "fixed6")]
    pub wups: f64,
    #[serde(serialize_with = "fixed6")]
    pub interpretation: f64,
    #[serde(serialize_with = "fixed6")]
    pub consensus: f64,
    #[serde(serialize_with = "fixed6")]
    pub accuracy: f64,
}

impl CorpusScores {
    /// Each aggregate is `100 · mean` of its per-question values.
    pub fn from_questions(scores: &[QuestionScore]) -> Result<Self, MetricsError> {
        if scores.is_empty() {
            return Err(MetricsError::EmptyCorpus);
        }
        let n = scores.len() as f64;
        let scaled =
            |f: &dyn Fn(&QuestionScore) -> f64| 100.0 * ordered_sum(scores.iter().map(f)) / n;
        Ok(CorpusScores {
            n_questions: scores.len(),
            wups: scaled(&|q| q.wups()),
            interpretation: scaled(&|q| q.interpretation),
            consensus: scaled(&|q| q.consensus),
            accuracy: scaled(&|q| f64::from(q.exact_accuracy)),
        })
    }
}

/// Scores every aligned pair. Per-question work runs on the current rayon
/// pool; output order follows `pairs`.
pub fn score_corpus<M: Measure + Sync + ?Sized>(
    pairs: &[Pair<'_>],
    mu: &M,
) -> Result<(Vec<QuestionScore>, CorpusScores), MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let scores = pairs
        .par_iter()
        .map(|p| score_question(&p.prediction.answer, p.truth, mu))
        .collect::<Result<Vec<_>, _>>()?;
    let corpus = CorpusScores::from_questions(&scores)?;
    Ok((scores, corpus))
}

//! Machine-readable reports.
//!
//! Reals are always written with exactly six decimals so that a report is
//! byte-for-byte reproducible for fixed inputs.

use std::fmt::Write as _;

use serde::ser::Error as _;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::dataset::{AlignMode, DatasetStats};
use crate::membership::{MeasureKind, MembershipConfig, OovPolicy};
use crate::metrics::{CorpusScores, QuestionScore};

/// Six-decimal rendering; negative zero prints as zero.
pub fn format_fixed(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

pub(crate) fn fixed6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    RawValue::from_string(format_fixed(*x))
        .map_err(S::Error::custom)?
        .serialize(s)
}

pub(crate) fn fixed6_seq<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let raw = xs
        .iter()
        .map(|x| RawValue::from_string(format_fixed(*x)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(S::Error::custom)?;
    raw.serialize(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Tsv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mu: MeasureKind,
    pub oov_policy: OovPolicy,
    #[serde(serialize_with = "fixed6")]
    pub threshold: f64,
    #[serde(serialize_with = "fixed6")]
    pub down_weight: f64,
    pub align: AlignMode,
    /// SHA-256 of the resource files, hex encoded.
    pub taxonomy_sha256: Option<String>,
    pub senses_sha256: Option<String>,
    pub embeddings_sha256: Option<String>,
}

impl ConfigEcho {
    pub fn new(config: &MembershipConfig, align: AlignMode) -> Self {
        ConfigEcho {
            mu: config.kind,
            oov_policy: config.oov_policy,
            threshold: config.threshold,
            down_weight: config.down_weight,
            align,
            taxonomy_sha256: None,
            senses_sha256: None,
            embeddings_sha256: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_questions: usize,
    /// Distinct answer tokens the active resource does not cover.
    pub oov_tokens: usize,
    pub unmatched_ground_truth: usize,
    pub unmatched_predictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: ConfigEcho,
    pub corpus: CorpusScores,
    pub per_question: Vec<QuestionScore>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    #[serde(serialize_with = "fixed6")]
    pub wups: f64,
    #[serde(serialize_with = "fixed6")]
    pub interpretation: f64,
    #[serde(serialize_with = "fixed6")]
    pub consensus: f64,
    #[serde(serialize_with = "fixed6")]
    pub accuracy: f64,
}

impl Deltas {
    /// `b − a` for every aggregate.
    pub fn between(a: &CorpusScores, b: &CorpusScores) -> Self {
        Deltas {
            wups: b.wups - a.wups,
            interpretation: b.interpretation - a.interpretation,
            consensus: b.consensus - a.consensus,
            accuracy: b.accuracy - a.accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: ConfigEcho,
    pub a: CorpusScores,
    pub b: CorpusScores,
    pub deltas: Deltas,
    #[serde(serialize_with = "fixed6")]
    pub min_delta: f64,
    /// Questions whose consensus scores differ by more than `min_delta`.
    pub differing_questions: Vec<String>,
    pub diagnostics_a: Diagnostics,
    pub diagnostics_b: Diagnostics,
}

/// JSON view of [`DatasetStats`] with fixed-precision reals.
#[derive(Serialize)]
struct StatsView {
    n_questions: usize,
    #[serde(serialize_with = "fixed6")]
    mean_question_length: f64,
    #[serde(serialize_with = "fixed6")]
    question_length_variance: f64,
    max_question_length: usize,
    vocabulary_size_questions: usize,
    vocabulary_size_answers: usize,
    #[serde(serialize_with = "fixed6")]
    mean_human_answers_per_question: f64,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn opt(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("-")
}

fn config_tsv(out: &mut String, c: &ConfigEcho) {
    let _ = writeln!(out, "# config");
    let _ = writeln!(out, "mu\t{}", c.mu);
    let _ = writeln!(out, "oov_policy\t{}", c.oov_policy);
    let _ = writeln!(out, "threshold\t{}", format_fixed(c.threshold));
    let _ = writeln!(out, "down_weight\t{}", format_fixed(c.down_weight));
    let _ = writeln!(out, "align\t{}", c.align);
    let _ = writeln!(out, "taxonomy_sha256\t{}", opt(&c.taxonomy_sha256));
    let _ = writeln!(out, "senses_sha256\t{}", opt(&c.senses_sha256));
    let _ = writeln!(out, "embeddings_sha256\t{}", opt(&c.embeddings_sha256));
}

fn corpus_tsv(out: &mut String, header: &str, c: &CorpusScores) {
    let _ = writeln!(out, "# {header}");
    let _ = writeln!(out, "n_questions\t{}", c.n_questions);
    let _ = writeln!(out, "wups\t{}", format_fixed(c.wups));
    let _ = writeln!(out, "interpretation\t{}", format_fixed(c.interpretation));
    let _ = writeln!(out, "consensus\t{}", format_fixed(c.consensus));
    let _ = writeln!(out, "accuracy\t{}", format_fixed(c.accuracy));
}

fn diagnostics_tsv(out: &mut String, header: &str, d: &Diagnostics) {
    let _ = writeln!(out, "# {header}");
    let _ = writeln!(out, "n_questions\t{}", d.n_questions);
    let _ = writeln!(out, "oov_tokens\t{}", d.oov_tokens);
    let _ = writeln!(out, "unmatched_ground_truth\t{}", d.unmatched_ground_truth);
    let _ = writeln!(out, "unmatched_predictions\t{}", d.unmatched_predictions);
}

impl EvaluationReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Tsv => {
                let mut out = String::new();
                config_tsv(&mut out, &self.config);
                corpus_tsv(&mut out, "corpus", &self.corpus);
                let _ = writeln!(out, "# per_question");
                let _ = writeln!(
                    out,
                    "question_id\twups_vs\tinterpretation\tconsensus\texact_accuracy"
                );
                for q in &self.per_question {
                    let vs: Vec<String> = q.wups_vs.iter().map(|x| format_fixed(*x)).collect();
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}",
                        q.question_id,
                        vs.join(";"),
                        format_fixed(q.interpretation),
                        format_fixed(q.consensus),
                        q.exact_accuracy
                    );
                }
                diagnostics_tsv(&mut out, "diagnostics", &self.diagnostics);
                out
            }
        }
    }
}

impl ComparisonReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Tsv => {
                let mut out = String::new();
                config_tsv(&mut out, &self.config);
                corpus_tsv(&mut out, "a", &self.a);
                corpus_tsv(&mut out, "b", &self.b);
                let _ = writeln!(out, "# deltas");
                let _ = writeln!(out, "wups\t{}", format_fixed(self.deltas.wups));
                let _ = writeln!(
                    out,
                    "interpretation\t{}",
                    format_fixed(self.deltas.interpretation)
                );
                let _ = writeln!(out, "consensus\t{}", format_fixed(self.deltas.consensus));
                let _ = writeln!(out, "accuracy\t{}", format_fixed(self.deltas.accuracy));
                let _ = writeln!(
                    out,
                    "# differing_questions (min_delta {})",
                    format_fixed(self.min_delta)
                );
                for id in &self.differing_questions {
                    let _ = writeln!(out, "{id}");
                }
                diagnostics_tsv(&mut out, "diagnostics_a", &self.diagnostics_a);
                diagnostics_tsv(&mut out, "diagnostics_b", &self.diagnostics_b);
                out
            }
        }
    }
}

pub fn render_stats(stats: &DatasetStats, format: Format) -> String {
    match format {
        Format::Json => to_json(&StatsView {
            n_questions: stats.n_questions,
            mean_question_length: stats.mean_question_length,
            question_length_variance: stats.question_length_variance,
            max_question_length: stats.max_question_length,
            vocabulary_size_questions: stats.vocabulary_size_questions,
            vocabulary_size_answers: stats.vocabulary_size_answers,
            mean_human_answers_per_question: stats.mean_human_answers_per_question,
        }),
        Format::Tsv => {
            let mut out = String::new();
            let _ = writeln!(out, "n_questions\t{}", stats.n_questions);
            let _ = writeln!(
                out,
                "mean_question_length\t{}",
                format_fixed(stats.mean_question_length)
            );
            let _ = writeln!(
                out,
                "question_length_variance\t{}",
                format_fixed(stats.question_length_variance)
            );
            let _ = writeln!(out, "max_question_length\t{}", stats.max_question_length);
            let _ = writeln!(
                out,
                "vocabulary_size_questions\t{}",
                stats.vocabulary_size_questions
            );
            let _ = writeln!(
                out,
                "vocabulary_size_answers\t{}",
                stats.vocabulary_size_answers
            );
            let _ = writeln!(
                out,
                "mean_human_answers_per_question\t{}",
                format_fixed(stats.mean_human_answers_per_question)
            );
            out
        }
    }
}

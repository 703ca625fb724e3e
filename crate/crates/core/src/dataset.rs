//! Ground-truth and prediction files.
//!
//! Ground truth is one record per line:
//!
//! ```text
//! question_id<TAB>question<TAB>answers[<TAB>image_id]
//! ```
//!
//! where `answers` separates annotators with `;` and terms within one
//! annotator's answer with `,`. Predictions are `question_id<TAB>answer`.
//! A line starting with `{` is read as a JSON object with the same field
//! names instead (`human_answers` is then a list, one entry per annotator).
//! Blank lines and lines starting with `#` are skipped.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answers::{self, AnswerBag};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate question id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: question {id:?} has no human answers")]
    NoHumanAnswers { line: usize, id: String },
    #[error("no records")]
    Empty,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignError {
    #[error("{}", describe_mismatch(.missing_predictions, .unknown_predictions))]
    Mismatch {
        missing_predictions: Vec<String>,
        unknown_predictions: Vec<String>,
    },
    #[error("predictions share no question id with the ground truth")]
    EmptyIntersection,
}

fn describe_mismatch(missing: &[String], unknown: &[String]) -> String {
    let mut parts = Vec::new();
    if !missing.is_empty() {
        parts.push(format!("no prediction for {}", missing.join(", ")));
    }
    if !unknown.is_empty() {
        parts.push(format!(
            "predictions for unknown ids {}",
            unknown.join(", ")
        ));
    }
    parts.join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QARecord {
    pub question_id: String,
    pub question: String,
    pub human_answers: Vec<AnswerBag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
}

impl QARecord {
    /// Tab-separated rendering, readable by [`load_ground_truth`].
    pub fn to_line(&self) -> String {
        let answers: Vec<String> = self.human_answers.iter().map(ToString::to_string).collect();
        let mut line = format!(
            "{}\t{}\t{}",
            self.question_id,
            self.question,
            answers.join(";")
        );
        if let Some(image) = &self.image_id {
            line.push('\t');
            line.push_str(image);
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub question_id: String,
    #[serde(default)]
    pub answer: AnswerBag,
}

impl PredictionRecord {
    pub fn to_line(&self) -> String {
        format!("{}\t{}", self.question_id, self.answer)
    }
}

/// Yields `(line number, content)` for every non-blank, non-comment line.
/// JSON lines are never treated as comments.
fn records<R: BufRead>(source: R) -> impl Iterator<Item = Result<(usize, String), DatasetError>> {
    source
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(e.into())),
            Ok(line) => {
                let t = line.trim();
                if t.is_empty() || t.starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, line.trim_end_matches('\r').to_owned())))
                }
            }
        })
}

fn is_json(line: &str) -> bool {
    line.trim_start().starts_with('{')
}

fn parse_json<'a, T: Deserialize<'a>>(line: usize, text: &'a str) -> Result<T, DatasetError> {
    serde_json::from_str(text).map_err(|e| DatasetError::Malformed {
        line,
        reason: e.to_string(),
    })
}

fn check_id(line: usize, id: &str) -> Result<String, DatasetError> {
    let id = id.trim();
    if id.is_empty() || id.contains(char::is_whitespace) {
        return Err(DatasetError::Malformed {
            line,
            reason: format!("invalid question id {id:?}"),
        });
    }
    Ok(id.to_owned())
}

fn parse_truth_line(line: usize, text: &str) -> Result<QARecord, DatasetError> {
    let mut record = if is_json(text) {
        parse_json::<QARecord>(line, text)?
    } else {
        let fields: Vec<&str> = text.split('\t').collect();
        let (id, question, answers, image) = match fields.as_slice() {
            [id, q, a] => (id, q, a, None),
            [id, q, a, img] => (id, q, a, Some(img.trim()).filter(|s| !s.is_empty())),
            _ => {
                return Err(DatasetError::Malformed {
                    line,
                    reason: format!(
                        "expected 3 or 4 tab-separated fields, found {}",
                        fields.len()
                    ),
                })
            }
        };
        QARecord {
            question_id: id.to_string(),
            question: question.to_string(),
            human_answers: answers.split(';').map(answers::normalize).collect(),
            image_id: image.map(str::to_owned),
        }
    };
    record.question_id = check_id(line, &record.question_id)?;
    record.human_answers.retain(|bag| !bag.is_empty());
    if record.human_answers.is_empty() {
        return Err(DatasetError::NoHumanAnswers {
            line,
            id: record.question_id,
        });
    }
    Ok(record)
}

fn parse_prediction_line(line: usize, text: &str) -> Result<PredictionRecord, DatasetError> {
    let mut record = if is_json(text) {
        parse_json::<PredictionRecord>(line, text)?
    } else {
        let fields: Vec<&str> = text.split('\t').collect();
        match fields.as_slice() {
            [id] => PredictionRecord {
                question_id: id.to_string(),
                answer: AnswerBag::empty(),
            },
            [id, answer] => PredictionRecord {
                question_id: id.to_string(),
                answer: answers::normalize(answer),
            },
            _ => {
                return Err(DatasetError::Malformed {
                    line,
                    reason: format!(
                        "expected 1 or 2 tab-separated fields, found {}",
                        fields.len()
                    ),
                })
            }
        }
    };
    record.question_id = check_id(line, &record.question_id)?;
    Ok(record)
}

fn load<R, T>(
    source: R,
    parse: fn(usize, &str) -> Result<T, DatasetError>,
    id_of: fn(&T) -> &str,
) -> Result<Vec<T>, DatasetError>
where
    R: BufRead,
{
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for item in records(source) {
        let (line, text) = item?;
        let record = parse(line, &text)?;
        if !seen.insert(id_of(&record).to_owned()) {
            return Err(DatasetError::DuplicateId {
                line,
                id: id_of(&record).to_owned(),
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_ground_truth<R: BufRead>(source: R) -> Result<Vec<QARecord>, DatasetError> {
    load(source, parse_truth_line, |r| &r.question_id)
}

pub fn load_predictions<R: BufRead>(source: R) -> Result<Vec<PredictionRecord>, DatasetError> {
    load(source, parse_prediction_line, |r| &r.question_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    /// Id sets must match exactly.
    #[default]
    Strict,
    /// Score the common ids, report the rest.
    Intersect,
}

impl fmt::Display for AlignMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlignMode::Strict => "strict",
            AlignMode::Intersect => "intersect",
        })
    }
}

/// A prediction joined with its ground-truth record.
#[derive(Debug, Clone, Copy)]
pub struct Pair<'a> {
    pub prediction: &'a PredictionRecord,
    pub truth: &'a QARecord,
}

#[derive(Debug, Clone)]
pub struct Alignment<'a> {
    /// In ground-truth order.
    pub pairs: Vec<Pair<'a>>,
    /// Ground-truth ids without a prediction, in ground-truth order.
    pub unmatched_truth: Vec<String>,
    /// Prediction ids absent from the ground truth, in prediction order.
    pub unmatched_predictions: Vec<String>,
}

pub fn align<'a>(
    truth: &'a [QARecord],
    predictions: &'a [PredictionRecord],
    mode: AlignMode,
) -> Result<Alignment<'a>, AlignError> {
    let by_id: HashMap<&str, &PredictionRecord> = predictions
        .iter()
        .map(|p| (p.question_id.as_str(), p))
        .collect();
    let truth_ids: HashSet<&str> = truth.iter().map(|t| t.question_id.as_str()).collect();

    let mut pairs = Vec::new();
    let mut unmatched_truth = Vec::new();
    for t in truth {
        match by_id.get(t.question_id.as_str()) {
            Some(p) => pairs.push(Pair {
                prediction: p,
                truth: t,
            }),
            None => unmatched_truth.push(t.question_id.clone()),
        }
    }
    let unmatched_predictions: Vec<String> = predictions
        .iter()
        .filter(|p| !truth_ids.contains(p.question_id.as_str()))
        .map(|p| p.question_id.clone())
        .collect();

    if mode == AlignMode::Strict
        && !(unmatched_truth.is_empty() && unmatched_predictions.is_empty())
    {
        return Err(AlignError::Mismatch {
            missing_predictions: unmatched_truth,
            unknown_predictions: unmatched_predictions,
        });
    }
    if pairs.is_empty() {
        return Err(AlignError::EmptyIntersection);
    }
    Ok(Alignment {
        pairs,
        unmatched_truth,
        unmatched_predictions,
    })
}

/// Descriptive statistics of a question set. Lengths are whitespace token
/// counts; variance is the population variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_questions: usize,
    pub mean_question_length: f64,
    pub question_length_variance: f64,
    pub max_question_length: usize,
    pub vocabulary_size_questions: usize,
    pub vocabulary_size_answers: usize,
    pub mean_human_answers_per_question: f64,
}

pub fn compute_stats(truth: &[QARecord]) -> Result<DatasetStats, DatasetError> {
    if truth.is_empty() {
        return Err(DatasetError::Empty);
    }
    // Integer sums keep the result independent of record order.
    let n = truth.len() as u128;
    let (mut sum, mut sum_sq, mut max_len, mut n_answers) = (0u128, 0u128, 0usize, 0u128);
    let mut question_vocab: BTreeSet<&str> = BTreeSet::new();
    let mut answer_vocab: BTreeSet<&str> = BTreeSet::new();
    let question_bags: Vec<AnswerBag> = truth
        .iter()
        .map(|r| answers::normalize(&r.question))
        .collect();
    for (record, bag) in truth.iter().zip(&question_bags) {
        let len = record.question.split_whitespace().count();
        sum += len as u128;
        sum_sq += (len as u128) * (len as u128);
        max_len = max_len.max(len);
        n_answers += record.human_answers.len() as u128;
        question_vocab.extend(bag.iter());
        for h in &record.human_answers {
            answer_vocab.extend(h.iter());
        }
    }
    let nf = n as f64;
    Ok(DatasetStats {
        n_questions: truth.len(),
        mean_question_length: sum as f64 / nf,
        question_length_variance: (n * sum_sq - sum * sum) as f64 / (nf * nf),
        max_question_length: max_len,
        vocabulary_size_questions: question_vocab.len(),
        vocabulary_size_answers: answer_vocab.len(),
        mean_human_answers_per_question: n_answers as f64 / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gt(src: &str) -> Result<Vec<QARecord>, DatasetError> {
        load_ground_truth(src.as_bytes())
    }

    fn preds(src: &str) -> Result<Vec<PredictionRecord>, DatasetError> {
        load_predictions(src.as_bytes())
    }

    #[test]
    fn single_ground_truth_line() {
        let r = gt("q1\twhat is on the desk\tlamp\timage12\n").unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].question_id, "q1");
        assert_eq!(r[0].human_answers, vec![answers::normalize("lamp")]);
        assert_eq!(r[0].image_id.as_deref(), Some("image12"));
    }

    #[test]
    fn annotators_split_on_semicolon() {
        let r = gt("q1\twhat is it\tchair;armchair\n").unwrap();
        assert_eq!(
            r[0].human_answers,
            vec![answers::normalize("chair"), answers::normalize("armchair")]
        );
        let r = gt("q1\twhat is it\tchair, table;sofa\n").unwrap();
        assert_eq!(r[0].human_answers[0].len(), 2);
    }

    #[test]
    fn ground_truth_errors() {
        let err = gt("q1\ta\tchair\nq1\tb\ttable\n").unwrap_err();
        assert!(
            matches!(err, DatasetError::DuplicateId { line: 2, .. }),
            "{err}"
        );
        let err = gt("# header\nq1\ta\t ; \n").unwrap_err();
        assert!(
            matches!(err, DatasetError::NoHumanAnswers { line: 2, .. }),
            "{err}"
        );
        let err = gt("q1\tjust two\n").unwrap_err();
        assert!(
            matches!(err, DatasetError::Malformed { line: 1, .. }),
            "{err}"
        );
        let err = gt("{\"question_id\": \"q1\"}\n").unwrap_err();
        assert!(
            matches!(err, DatasetError::Malformed { line: 1, .. }),
            "{err}"
        );
        let err = gt("\ta\tchair\n").unwrap_err();
        assert!(
            matches!(err, DatasetError::Malformed { line: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn json_lines_are_detected() {
        let src = concat!(
            "{\"question_id\": \"q1\", \"question\": \"what is it\", \"human_answers\": [\"chair\", [\"red\", \"Blue\"]]}\n",
            "q2\twhat color\tred\n",
        );
        let r = gt(src).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].human_answers[1], ["red", "blue"].into_iter().collect());
        assert_eq!(r[0].image_id, None);

        let p =
            preds("{\"question_id\": \"q1\", \"answer\": \"Chair\"}\n{\"question_id\": \"q2\"}\n")
                .unwrap();
        assert_eq!(p[0].answer, answers::normalize("chair"));
        assert!(p[1].answer.is_empty());
    }

    #[test]
    fn prediction_lines() {
        let p = preds("q1\tchair, table\n").unwrap();
        assert_eq!(p[0].answer, answers::normalize("table chair"));
        let p = preds("q1\t\nq2\n").unwrap();
        assert!(p[0].answer.is_empty() && p[1].answer.is_empty());
        let err = preds("q1\tchair\nq1\ttable\n").unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateId { line: 2, .. }));
        let err = preds("q1\tchair\textra\n").unwrap_err();
        assert!(matches!(err, DatasetError::Malformed { line: 1, .. }));
    }

    #[test]
    fn alignment_modes() {
        let truth = gt("q1\ta\tchair\nq2\tb\ttable\nq3\tc\tred\n").unwrap();
        let full = preds("q3\tred\nq1\tchair\nq2\ttable\n").unwrap();
        let a = align(&truth, &full, AlignMode::Strict).unwrap();
        assert_eq!(a.pairs.len(), 3);
        let order: Vec<&str> = a
            .pairs
            .iter()
            .map(|p| p.truth.question_id.as_str())
            .collect();
        assert_eq!(order, ["q1", "q2", "q3"]);
        assert!(a
            .pairs
            .iter()
            .all(|p| p.truth.question_id == p.prediction.question_id));

        let partial = preds("q1\tchair\nq3\tred\n").unwrap();
        let err = align(&truth, &partial, AlignMode::Strict).unwrap_err();
        assert!(err.to_string().contains("q2"), "{err}");

        let a = align(&truth, &partial, AlignMode::Intersect).unwrap();
        assert_eq!(a.pairs.len(), 2);
        assert_eq!(a.unmatched_truth, ["q2"]);
        assert!(a.unmatched_predictions.is_empty());

        let other = preds("q9\tchair\n").unwrap();
        assert_eq!(
            align(&truth, &other, AlignMode::Intersect).unwrap_err(),
            AlignError::EmptyIntersection
        );
    }

    #[test]
    fn stats_examples() {
        let truth = gt("q1\tone two three four five six seven eight nine ten\tx\nq2\tone two three four five six seven eight nine ten eleven\ty;z\n").unwrap();
        let s = compute_stats(&truth).unwrap();
        assert_eq!(s.mean_question_length, 10.5);
        assert_eq!(s.question_length_variance, 0.25);
        assert_eq!(s.max_question_length, 11);
        assert_eq!(s.vocabulary_size_questions, 11);
        assert_eq!(s.vocabulary_size_answers, 3);
        assert_eq!(s.mean_human_answers_per_question, 1.5);

        let s = compute_stats(&gt("q1\twhat is it\tx\n").unwrap()).unwrap();
        assert_eq!(s.max_question_length, 3);
        assert!(matches!(compute_stats(&[]), Err(DatasetError::Empty)));
    }

    fn token() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9_-]{0,5}[a-z0-9]"
    }

    fn bag() -> impl Strategy<Value = AnswerBag> {
        proptest::collection::vec(token(), 1..4)
            .prop_map(|v| v.iter().map(String::as_str).collect())
    }

    fn record() -> impl Strategy<Value = QARecord> {
        (
            "[a-z0-9]{1,6}",
            "[A-Za-z ?,]{0,30}",
            proptest::collection::vec(bag(), 1..4),
            proptest::option::of("[a-z0-9_]{1,8}"),
        )
            .prop_map(
                |(question_id, question, human_answers, image_id)| QARecord {
                    question_id,
                    question,
                    human_answers,
                    image_id,
                },
            )
    }

    fn unique(records: Vec<QARecord>) -> Vec<QARecord> {
        let mut seen = HashSet::new();
        records
            .into_iter()
            .filter(|r| seen.insert(r.question_id.clone()))
            .collect()
    }

    proptest! {
        #[test]
        fn ground_truth_round_trip(records in proptest::collection::vec(record(), 1..6).prop_map(unique)) {
            let tsv: String = records.iter().map(|r| r.to_line() + "\n").collect();
            prop_assert_eq!(&load_ground_truth(tsv.as_bytes()).unwrap(), &records);
            let json: String = records.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
            prop_assert_eq!(&load_ground_truth(json.as_bytes()).unwrap(), &records);
        }

        #[test]
        fn prediction_round_trip(ids in proptest::collection::btree_set("[a-z0-9]{1,6}", 1..6), answers in proptest::collection::vec(proptest::option::of(bag()), 6)) {
            let records: Vec<PredictionRecord> = ids
                .into_iter()
                .zip(answers)
                .map(|(question_id, answer)| PredictionRecord { question_id, answer: answer.unwrap_or_default() })
                .collect();
            let tsv: String = records.iter().map(|r| r.to_line() + "\n").collect();
            prop_assert_eq!(load_predictions(tsv.as_bytes()).unwrap(), records);
        }

        #[test]
        fn stats_ignore_order(records in proptest::collection::vec(record(), 1..8), seed in any::<u64>()) {
            let mut shuffled = records.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            prop_assert_eq!(compute_stats(&records).unwrap(), compute_stats(&shuffled).unwrap());
        }

        #[test]
        fn strict_iff_nothing_unmatched(keep in proptest::collection::vec(any::<bool>(), 5), extra in any::<bool>()) {
            let truth: Vec<QARecord> = (0..5)
                .map(|i| QARecord { question_id: format!("q{i}"), question: String::new(), human_answers: vec![answers::normalize("x")], image_id: None })
                .collect();
            let mut predictions: Vec<PredictionRecord> = keep.iter().enumerate().filter(|(_, k)| **k)
                .map(|(i, _)| PredictionRecord { question_id: format!("q{i}"), answer: AnswerBag::empty() })
                .collect();
            if extra {
                predictions.push(PredictionRecord { question_id: "zz".into(), answer: AnswerBag::empty() });
            }
            let strict = align(&truth, &predictions, AlignMode::Strict);
            match align(&truth, &predictions, AlignMode::Intersect) {
                Ok(a) => prop_assert_eq!(strict.is_ok(), a.unmatched_truth.is_empty() && a.unmatched_predictions.is_empty()),
                Err(_) => prop_assert!(strict.is_err()),
            }
        }
    }
}

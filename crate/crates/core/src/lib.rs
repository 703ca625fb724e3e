//! Scoring toolkit for open-ended question answering benchmarks.
//!
//! Machine answers are compared with one or more human answers as bags of
//! words. The per-question WUPS kernel ([`metrics::wups_single`]) combines
//! token-level membership scores from a pluggable [`membership::Measure`]:
//! exact match, Wu–Palmer similarity over a concept [`taxonomy::Taxonomy`],
//! or cosine similarity of word vectors. With several annotators per
//! question, the interpretation score keeps the best match and the consensus
//! score the average.
//!
//! ```
//! use wups::answers::normalize;
//! use wups::membership::Membership;
//! use wups::metrics::{consensus_single, wups_single};
//!
//! let exact = Membership::exact();
//! assert_eq!(wups_single(&normalize("chair, table"), &normalize("Table chair"), &exact), 1.0);
//! let humans = [normalize("chair"), normalize("red")];
//! assert_eq!(consensus_single(&normalize("chair"), &humans, &exact).unwrap(), 0.5);
//! ```

pub mod answers;
pub mod cli;
pub mod dataset;
pub mod membership;
pub mod metrics;
pub mod report;
pub mod taxonomy;

pub use answers::{normalize, AnswerBag};
pub use dataset::{PredictionRecord, QARecord};
pub use membership::{Measure, MeasureKind, Membership, MembershipConfig, OovPolicy};
pub use metrics::{CorpusScores, QuestionScore};
pub use taxonomy::{SenseMap, Taxonomy};

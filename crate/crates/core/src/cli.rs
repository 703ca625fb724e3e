//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 unreadable or
//! unparsable input, 3 alignment failure, 4 taxonomy/embedding resource
//! failure.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{
    self, AlignError, AlignMode, Alignment, DatasetError, PredictionRecord, QARecord,
};
use crate::membership::{
    self, EmbeddingError, MeasureKind, Membership, MembershipConfig, MembershipError, OovPolicy,
    Resource,
};
use crate::metrics::{self, CorpusScores, MetricsError, QuestionScore};
use crate::report::{ComparisonReport, ConfigEcho, Deltas, Diagnostics, EvaluationReport, Format};
use crate::taxonomy::{self, SenseMap, TaxonomyError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: DatasetError },
    #[error("{0}")]
    Align(#[from] AlignError),
    #[error("{path}: {source}")]
    Taxonomy {
        path: PathBuf,
        source: TaxonomyError,
    },
    #[error("{path}: {source}")]
    Embeddings {
        path: PathBuf,
        source: EmbeddingError,
    },
    #[error("{path}: {source}")]
    Resource {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("cannot write output: {0}")]
    Output(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Parse { .. } => 2,
            CliError::Align(_) => 3,
            CliError::Taxonomy { .. } | CliError::Embeddings { .. } | CliError::Resource { .. } => {
                4
            }
            CliError::Membership(MembershipError::MissingResource(..)) => 4,
            CliError::Metrics(MetricsError::EmptyCorpus) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "wups",
    version,
    about = "Score open-ended QA answers with WUPS, Interpretation and Consensus metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one prediction file against the ground truth.
    Evaluate {
        gt: PathBuf,
        pred: PathBuf,
        #[command(flatten)]
        scoring: ScoringArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare two prediction files (deltas are B minus A).
    Compare {
        gt: PathBuf,
        pred_a: PathBuf,
        pred_b: PathBuf,
        #[command(flatten)]
        scoring: ScoringArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Report questions whose consensus scores differ by more than this.
        #[arg(long, default_value_t = 0.0)]
        min_delta: f64,
    },
    /// Print question-set statistics.
    Stats {
        gt: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MuArg {
    Exact,
    Wup,
    Embedding,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OovArg {
    ExactFallback,
    Zero,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlignArg {
    Strict,
    Intersect,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Args)]
pub struct ScoringArgs {
    #[arg(long, value_enum, default_value = "exact")]
    pub mu: MuArg,
    /// Edge-list concept hierarchy (required by --mu wup).
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Word-to-concept map; without it every concept names itself.
    #[arg(long)]
    pub senses: Option<PathBuf>,
    /// Word-vector text file (required by --mu embedding).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "exact-fallback")]
    pub oov: OovArg,
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.1)]
    pub down_weight: f64,
    #[arg(long, value_enum, default_value = "strict")]
    pub align: AlignArg,
    /// Worker threads for per-question scoring.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl OutputArgs {
    fn format(&self) -> Format {
        match self.format {
            FormatArg::Json => Format::Json,
            FormatArg::Tsv => Format::Tsv,
        }
    }
}

impl ScoringArgs {
    pub fn membership_config(&self) -> MembershipConfig {
        let kind = match self.mu {
            MuArg::Exact => MeasureKind::Exact,
            MuArg::Wup => MeasureKind::TaxonomyWup,
            MuArg::Embedding => MeasureKind::EmbeddingCosine,
        };
        let oov = match self.oov {
            OovArg::ExactFallback => OovPolicy::ExactFallback,
            OovArg::Zero => OovPolicy::Zero,
        };
        MembershipConfig::new(kind)
            .with_oov(oov)
            .with_threshold(self.threshold, self.down_weight)
    }

    pub fn align_mode(&self) -> AlignMode {
        match self.align {
            AlignArg::Strict => AlignMode::Strict,
            AlignArg::Intersect => AlignMode::Intersect,
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_resource(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Resource {
        path: path.to_owned(),
        source,
    })
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<QARecord>, CliError> {
    let bytes = read_input(path)?;
    dataset::load_ground_truth(&bytes[..]).map_err(|source| CliError::Parse {
        path: path.to_owned(),
        source,
    })
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, CliError> {
    let bytes = read_input(path)?;
    dataset::load_predictions(&bytes[..]).map_err(|source| CliError::Parse {
        path: path.to_owned(),
        source,
    })
}

/// Loads whatever resource the configured measure needs and returns it with
/// the config echo (including file digests).
pub fn build_membership(args: &ScoringArgs) -> Result<(Membership, ConfigEcho), CliError> {
    let config = args.membership_config();
    config.validate()?;
    let mut echo = ConfigEcho::new(&config, args.align_mode());
    let resource = match config.kind {
        MeasureKind::Exact => Resource::None,
        MeasureKind::TaxonomyWup => {
            let Some(path) = &args.taxonomy else {
                return Err(
                    MembershipError::MissingResource(config.kind, "taxonomy (--taxonomy)").into(),
                );
            };
            let bytes = read_resource(path)?;
            echo.taxonomy_sha256 = Some(sha256_hex(&bytes));
            let tax = taxonomy::load_taxonomy(&bytes[..]).map_err(|source| CliError::Taxonomy {
                path: path.clone(),
                source,
            })?;
            let senses = match &args.senses {
                Some(path) => {
                    let bytes = read_resource(path)?;
                    echo.senses_sha256 = Some(sha256_hex(&bytes));
                    taxonomy::load_senses(&bytes[..], &tax).map_err(|source| {
                        CliError::Taxonomy {
                            path: path.clone(),
                            source,
                        }
                    })?
                }
                None => SenseMap::identity(&tax),
            };
            Resource::Taxonomy {
                taxonomy: Arc::new(tax),
                senses: Arc::new(senses),
            }
        }
        MeasureKind::EmbeddingCosine => {
            let Some(path) = &args.embeddings else {
                return Err(MembershipError::MissingResource(
                    config.kind,
                    "embedding table (--embeddings)",
                )
                .into());
            };
            let bytes = read_resource(path)?;
            echo.embeddings_sha256 = Some(sha256_hex(&bytes));
            let table =
                membership::load_embeddings(&bytes[..]).map_err(|source| CliError::Embeddings {
                    path: path.clone(),
                    source,
                })?;
            Resource::Embeddings(Arc::new(table))
        }
    };
    Ok((Membership::new(config, resource)?, echo))
}

fn diagnostics(alignment: &Alignment<'_>, mu: &Membership) -> Diagnostics {
    let mut tokens: BTreeSet<&str> = BTreeSet::new();
    for pair in &alignment.pairs {
        tokens.extend(pair.prediction.answer.iter());
        for h in &pair.truth.human_answers {
            tokens.extend(h.iter());
        }
    }
    Diagnostics {
        n_questions: alignment.pairs.len(),
        oov_tokens: tokens.iter().filter(|t| !mu.covers(t)).count(),
        unmatched_ground_truth: alignment.unmatched_truth.len(),
        unmatched_predictions: alignment.unmatched_predictions.len(),
    }
}

fn score(
    truth: &[QARecord],
    predictions: &[PredictionRecord],
    mu: &Membership,
    args: &ScoringArgs,
) -> Result<(Vec<QuestionScore>, CorpusScores, Diagnostics), CliError> {
    let alignment = dataset::align(truth, predictions, args.align_mode())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(usize::from(args.jobs))
        .build()?;
    let (per_question, corpus) = pool.install(|| metrics::score_corpus(&alignment.pairs, mu))?;
    Ok((per_question, corpus, diagnostics(&alignment, mu)))
}

pub fn evaluate(gt: &Path, pred: &Path, args: &ScoringArgs) -> Result<EvaluationReport, CliError> {
    let truth = load_ground_truth(gt)?;
    let predictions = load_predictions(pred)?;
    let (mu, config) = build_membership(args)?;
    let (per_question, corpus, diagnostics) = score(&truth, &predictions, &mu, args)?;
    Ok(EvaluationReport {
        config,
        corpus,
        per_question,
        diagnostics,
    })
}

pub fn compare(
    gt: &Path,
    pred_a: &Path,
    pred_b: &Path,
    args: &ScoringArgs,
    min_delta: f64,
) -> Result<ComparisonReport, CliError> {
    let truth = load_ground_truth(gt)?;
    let preds_a = load_predictions(pred_a)?;
    let preds_b = load_predictions(pred_b)?;
    let (mu, config) = build_membership(args)?;
    let (qa, a, diagnostics_a) = score(&truth, &preds_a, &mu, args)?;
    let (qb, b, diagnostics_b) = score(&truth, &preds_b, &mu, args)?;

    let consensus_b: HashMap<&str, f64> = qb
        .iter()
        .map(|q| (q.question_id.as_str(), q.consensus))
        .collect();
    let differing_questions = qa
        .iter()
        .filter(|x| {
            consensus_b
                .get(x.question_id.as_str())
                .is_some_and(|y| (y - x.consensus).abs() > min_delta)
        })
        .map(|x| x.question_id.clone())
        .collect();

    Ok(ComparisonReport {
        config,
        deltas: Deltas::between(&a, &b),
        a,
        b,
        min_delta,
        differing_questions,
        diagnostics_a,
        diagnostics_b,
    })
}

pub fn stats(gt: &Path) -> Result<dataset::DatasetStats, CliError> {
    let truth = load_ground_truth(gt)?;
    dataset::compute_stats(&truth).map_err(|source| CliError::Parse {
        path: gt.to_owned(),
        source,
    })
}

fn emit(text: &str, output: &OutputArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &output.output {
        Some(path) => fs::write(path, text).map_err(CliError::Output),
        None => stdout.write_all(text.as_bytes()).map_err(CliError::Output),
    }
}

/// Runs one command, writing the report to `stdout` (or the `--output`
/// file) and warnings to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Evaluate {
            gt,
            pred,
            scoring,
            output,
        } => {
            let report = evaluate(gt, pred, scoring)?;
            warn_unmatched(stderr, "", &report.diagnostics);
            emit(&report.render(output.format()), output, stdout)
        }
        Command::Compare {
            gt,
            pred_a,
            pred_b,
            scoring,
            output,
            min_delta,
        } => {
            let report = compare(gt, pred_a, pred_b, scoring, *min_delta)?;
            warn_unmatched(stderr, "A: ", &report.diagnostics_a);
            warn_unmatched(stderr, "B: ", &report.diagnostics_b);
            emit(&report.render(output.format()), output, stdout)
        }
        Command::Stats { gt, output } => {
            let s = stats(gt)?;
            emit(
                &crate::report::render_stats(&s, output.format()),
                output,
                stdout,
            )
        }
    }
}

fn warn_unmatched(stderr: &mut dyn Write, prefix: &str, d: &Diagnostics) {
    if d.unmatched_ground_truth > 0 {
        let _ = writeln!(
            stderr,
            "warning: {prefix}{} ground-truth question(s) have no prediction",
            d.unmatched_ground_truth
        );
    }
    if d.unmatched_predictions > 0 {
        let _ = writeln!(
            stderr,
            "warning: {prefix}{} prediction(s) refer to unknown questions",
            d.unmatched_predictions
        );
    }
}

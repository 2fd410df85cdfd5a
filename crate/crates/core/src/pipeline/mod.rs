//! Stage-by-stage pipeline orchestration with persisted artifacts,
//! mandatory human checkpoints, resume, and cross-run reporting.

mod config;
mod manifest;
mod report;
mod stages;

pub use config::{BackendConfig, BackendMode, ChunkingConfig, ConfigError, PipelineConfig};
pub use manifest::{RunManifest, RunPaths, Stage, StageState, StageStatus};
pub use report::{
    emit_report, load_evaluations, overall_alignment, render_csv, render_markdown, CrossRunReport,
};
pub use stages::{
    build_backend, create_run, export_review, import_review, open_run, resume, run_stage,
    DocAlignment, RunEvaluation, VerificationOutcome, VerificationRecord,
};

use thiserror::Error;

use crate::answering::AnswerError;
use crate::backend::BackendError;
use crate::corpus::CorpusError;
use crate::cq::CqError;
use crate::judge::JudgeError;
use crate::kg::KgError;
use crate::ontology::OntologyError;

#[derive(Debug, Error)]
pub enum StageError {
    #[error("stage `{stage}` cannot run: stage `{blocked_on}` has not completed")]
    Ordering { stage: Stage, blocked_on: Stage },
    #[error("checkpoint not satisfied at stage `{stage}`: {message}")]
    Checkpoint { stage: Stage, message: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Cq(#[from] CqError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Answer(#[from] AnswerError),
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("I/O error at {path}: {message}")]
    Io { path: String, message: String },
    #[error("corrupt manifest {path}: {message}")]
    CorruptManifest { path: String, message: String },
    #[error("run `{0}` already exists with a different config")]
    RunConfigMismatch(String),
    #[error("run `{0}` does not exist")]
    RunMissing(String),
    #[error("missing artifact for run `{run_id}`: {what}")]
    MissingArtifact { run_id: String, what: String },
}

/// Process exit codes: 2 ordering, 3 checkpoint, 4 backend, 5 parse,
/// 6 config, 1 anything else.
impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self {
            StageError::Ordering { .. } => 2,
            StageError::Checkpoint { .. } => 3,
            StageError::Backend(_) => 4,
            StageError::Cq(CqError::Backend(_))
            | StageError::Ontology(OntologyError::Backend(_))
            | StageError::Answer(AnswerError::Backend(_))
            | StageError::Kg(KgError::Backend(_))
            | StageError::Judge(JudgeError::Backend(_)) => 4,
            StageError::Cq(
                CqError::GenerationParse { .. }
                | CqError::MalformedLine { .. }
                | CqError::EmptyReview,
            ) => 5,
            StageError::Ontology(OntologyError::ExtractionParse { .. }) => 5,
            StageError::Judge(
                JudgeError::VerdictParse { .. }
                | JudgeError::VerificationParse { .. }
                | JudgeError::MalformedGroundTruth { .. }
                | JudgeError::DuplicateGroundTruth { .. },
            ) => 5,
            StageError::Config(_) => 6,
            _ => 1,
        }
    }
}

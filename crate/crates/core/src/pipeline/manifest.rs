//! Run manifest and on-disk layout.
//!
//! A run directory holds the config snapshot, the manifest, and one
//! artifact tree per stage. All inter-stage data flows through these files;
//! nothing is handed off in memory, which is what makes the human
//! checkpoints and `resume` possible. The manifest is the only file that
//! carries timestamps.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::util::{read_json, write_json};

use super::StageError;

/// Pipeline stages in execution order. `gencq` completes only when the
/// reviewed question file has been imported (the stage-2 checkpoint);
/// `evaluate` requires the ground-truth file (the stage-6 checkpoint).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Gencq,
    Ontology,
    Answer,
    Buildkg,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Gencq,
        Stage::Ontology,
        Stage::Answer,
        Stage::Buildkg,
        Stage::Evaluate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Gencq => "gencq",
            Stage::Ontology => "ontology",
            Stage::Answer => "answer",
            Stage::Buildkg => "buildkg",
            Stage::Evaluate => "evaluate",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.iter().copied().find(|stage| stage.as_str() == s)
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Pending,
    AwaitingReview,
    Done,
    Failed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageState {
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
}

impl Default for StageStatus {
    fn default() -> Self {
        StageStatus::Pending
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub prompt_version: String,
    pub answer_version: String,
    pub stages: std::collections::BTreeMap<Stage, StageState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub updated_at: Option<String>,
}

impl RunManifest {
    pub fn new(run_id: &str, prompt_version: &str, answer_version: &str) -> Self {
        RunManifest {
            run_id: run_id.to_string(),
            prompt_version: prompt_version.to_string(),
            answer_version: answer_version.to_string(),
            stages: Stage::ALL
                .iter()
                .map(|s| (*s, StageState::default()))
                .collect(),
            updated_at: None,
        }
    }

    pub fn status(&self, stage: Stage) -> &StageStatus {
        &self.stages[&stage].status
    }

    pub fn set_status(&mut self, stage: Stage, status: StageStatus, diagnostic: Option<String>) {
        let state = self.stages.entry(stage).or_default();
        state.status = status;
        state.diagnostic = diagnostic;
        self.updated_at = Some(chrono::Utc::now().to_rfc3339());
    }

    pub fn record_artifact(&mut self, stage: Stage, path: impl Into<String>) {
        let state = self.stages.entry(stage).or_default();
        let path = path.into();
        if !state.artifacts.contains(&path) {
            state.artifacts.push(path);
        }
    }

    /// Checks that every stage before `stage` is done. An earlier stage
    /// stuck in `awaiting_review` is a checkpoint error; anything else
    /// pending is an ordering error.
    pub fn ensure_ready(&self, stage: Stage) -> Result<(), StageError> {
        for prior in Stage::ALL.iter().take_while(|s| **s != stage) {
            match self.status(*prior) {
                StageStatus::Done => {}
                StageStatus::AwaitingReview => {
                    return Err(StageError::Checkpoint {
                        stage: *prior,
                        message: format!(
                            "stage `{prior}` is awaiting review; import the reviewed file first"
                        ),
                    });
                }
                _ => {
                    return Err(StageError::Ordering {
                        stage,
                        blocked_on: *prior,
                    });
                }
            }
        }
        Ok(())
    }

    /// The first stage that is not done, if any.
    pub fn next_runnable(&self) -> Option<Stage> {
        Stage::ALL
            .iter()
            .copied()
            .find(|s| *self.status(*s) != StageStatus::Done)
    }
}

/// All file locations under one run directory.
#[derive(Clone, Debug)]
pub struct RunPaths {
    pub run_dir: PathBuf,
    pub prompt_version: String,
    pub answer_version: String,
}

impl RunPaths {
    pub fn new(runs_dir: &Path, run_id: &str, prompt_version: &str, answer_version: &str) -> Self {
        RunPaths {
            run_dir: runs_dir.join(run_id),
            prompt_version: prompt_version.to_string(),
            answer_version: answer_version.to_string(),
        }
    }

    pub fn config(&self) -> PathBuf {
        self.run_dir.join("config.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.run_dir.join("manifest.json")
    }

    pub fn replay_dir(&self) -> PathBuf {
        self.run_dir.join("replay")
    }

    pub fn documents(&self) -> PathBuf {
        self.run_dir.join("corpus/documents.json")
    }

    pub fn chunks(&self) -> PathBuf {
        self.run_dir.join("corpus/chunks.json")
    }

    pub fn cq_generated(&self) -> PathBuf {
        self.run_dir.join("cqs/generated.json")
    }

    pub fn review_file(&self) -> PathBuf {
        self.run_dir.join("cqs/review.tsv")
    }

    pub fn cq_reviewed(&self) -> PathBuf {
        self.run_dir.join("cqs/reviewed.json")
    }

    pub fn ontology_ttl(&self) -> PathBuf {
        self.run_dir.join("ontology/ontology.ttl")
    }

    pub fn ontology_stats(&self) -> PathBuf {
        self.run_dir.join("ontology/stats.json")
    }

    pub fn concept_set(&self) -> PathBuf {
        self.run_dir.join("ontology/concepts.json")
    }

    /// Per-document leaf: `<run>/<doc>/<prompt_version>/<answer_version>/`.
    pub fn doc_dir(&self, doc_id: &str) -> PathBuf {
        self.run_dir
            .join(doc_id)
            .join(&self.prompt_version)
            .join(&self.answer_version)
    }

    pub fn answers(&self, doc_id: &str) -> PathBuf {
        self.doc_dir(doc_id).join("answers.json")
    }

    pub fn answer_errors(&self, doc_id: &str) -> PathBuf {
        self.doc_dir(doc_id).join("answer_errors.json")
    }

    pub fn kg_ttl(&self, doc_id: &str) -> PathBuf {
        self.doc_dir(doc_id).join("kg.ttl")
    }

    pub fn kg_result(&self, doc_id: &str) -> PathBuf {
        self.doc_dir(doc_id).join("kg_result.json")
    }

    pub fn kg_validation(&self, doc_id: &str) -> PathBuf {
        self.doc_dir(doc_id).join("validation.json")
    }

    pub fn kg_links(&self, doc_id: &str) -> PathBuf {
        self.doc_dir(doc_id).join("links.json")
    }

    pub fn verdicts(&self, doc_id: &str) -> PathBuf {
        self.doc_dir(doc_id).join("verdicts.json")
    }

    pub fn ground_truth(&self) -> PathBuf {
        self.run_dir.join("ground_truth.tsv")
    }

    pub fn evaluation_report(&self) -> PathBuf {
        self.run_dir.join("evaluation/report.json")
    }

    pub fn save_manifest(&self, manifest: &RunManifest) -> Result<(), StageError> {
        write_json(&self.manifest(), manifest).map_err(|e| StageError::Io {
            path: self.manifest().display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load_manifest(&self) -> Result<RunManifest, StageError> {
        read_json(&self.manifest()).map_err(|e| StageError::CorruptManifest {
            path: self.manifest().display().to_string(),
            message: e.to_string(),
        })
    }
}

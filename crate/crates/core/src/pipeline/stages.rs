//! Stage implementations. Every stage reads its inputs from files, writes
//! its artifacts atomically, and updates the manifest, so a run can be
//! resumed or audited at any point.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::answering::{answer_cq, compile_dont_know, CqAnswer};
use crate::backend::{
    ChatBackend, HttpBackend, RecordingBackend, ReplayBackend, ReplayStore, ScriptedBackend,
};
use crate::corpus::{chunk_document, ingest_corpus, Document, RetrievalIndex};
use crate::cq::{export_for_review, generate_cqs, import_reviewed, CqSet};
use crate::judge::{
    alignment_percentage, disagreement_report, judge_answer, load_ground_truth, verify_individual,
    DisagreementReport, JudgeError, VerdictOutcome, VerdictRecord,
};
use crate::kg::{build_kg, link_individuals, validate_kg, KgBuildResult, KgStatus};
use crate::ontology::{
    draft_ontology, extract_concept_set, load_foundation, normalize_ontology, ConceptSet,
    OntologySpec,
};
use crate::rdf::serialize_turtle;
use crate::util::{read_json, run_bounded, write_json};

use super::{
    BackendMode, PipelineConfig, RunManifest, RunPaths, Stage, StageError, StageStatus,
};

fn io_err(path: &Path, e: impl std::fmt::Display) -> StageError {
    StageError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Creates a run directory with a config snapshot and a fresh manifest.
/// Re-creating an existing run with the identical config is a no-op.
pub fn create_run(
    runs_dir: &Path,
    run_id: &str,
    config: &PipelineConfig,
) -> Result<RunPaths, StageError> {
    let paths = RunPaths::new(runs_dir, run_id, &config.prompt_version, &config.answer_version);
    let serialized = serde_json::to_string_pretty(config).expect("config serialization");
    if paths.config().exists() {
        let existing = std::fs::read_to_string(paths.config())
            .map_err(|e| io_err(&paths.config(), e))?;
        if existing.trim_end() != serialized {
            return Err(StageError::RunConfigMismatch(run_id.to_string()));
        }
        return Ok(paths);
    }
    crate::util::atomic_write(&paths.config(), format!("{serialized}\n").as_bytes())
        .map_err(|e| io_err(&paths.config(), e))?;
    let manifest = RunManifest::new(run_id, &config.prompt_version, &config.answer_version);
    paths.save_manifest(&manifest)?;
    Ok(paths)
}

/// Opens an existing run: paths, config snapshot, manifest.
pub fn open_run(
    runs_dir: &Path,
    run_id: &str,
) -> Result<(RunPaths, PipelineConfig, RunManifest), StageError> {
    let probe = RunPaths::new(runs_dir, run_id, "", "");
    if !probe.config().exists() {
        return Err(StageError::RunMissing(run_id.to_string()));
    }
    let config = PipelineConfig::load(&probe.config())?;
    let paths = RunPaths::new(runs_dir, run_id, &config.prompt_version, &config.answer_version);
    let manifest = paths.load_manifest()?;
    Ok((paths, config, manifest))
}

/// Instantiates the configured backend, wrapping it in a recorder when
/// `record` is set. Replay mode constructs no transport at all.
pub fn build_backend(
    config: &PipelineConfig,
    paths: &RunPaths,
) -> Result<Box<dyn ChatBackend>, StageError> {
    let fixtures_dir = config
        .backend
        .fixtures_dir
        .clone()
        .unwrap_or_else(|| paths.replay_dir());
    let inner: Box<dyn ChatBackend> = match config.backend.mode {
        BackendMode::Scripted => Box::new(ScriptedBackend),
        BackendMode::Replay => {
            return Ok(Box::new(ReplayBackend::new(ReplayStore::new(fixtures_dir))));
        }
        BackendMode::Live => {
            let api_key = std::env::var(&config.backend.api_key_env).ok();
            Box::new(HttpBackend::new(
                config.backend.base_url.clone(),
                api_key,
                Duration::from_secs(config.backend.timeout_secs),
            ))
        }
    };
    if config.backend.record {
        Ok(Box::new(RecordingBackend::new(
            inner,
            ReplayStore::new(fixtures_dir),
        )))
    } else {
        Ok(inner)
    }
}

/// Runs one stage by name with the standard precondition checks and
/// manifest bookkeeping.
pub fn run_stage(
    paths: &RunPaths,
    config: &PipelineConfig,
    stage: Stage,
    backend: &dyn ChatBackend,
) -> Result<(), StageError> {
    let mut manifest = paths.load_manifest()?;
    manifest.ensure_ready(stage)?;
    let outcome = match stage {
        Stage::Ingest => stage_ingest(paths, config, &mut manifest),
        Stage::Gencq => stage_gencq(paths, config, backend, &mut manifest),
        Stage::Ontology => stage_ontology(paths, config, backend, &mut manifest),
        Stage::Answer => stage_answer(paths, config, backend, &mut manifest),
        Stage::Buildkg => stage_buildkg(paths, config, backend, &mut manifest),
        Stage::Evaluate => stage_evaluate(paths, config, backend, &mut manifest),
    };
    match outcome {
        Ok(status) => {
            manifest.set_status(stage, status, None);
            paths.save_manifest(&manifest)?;
            Ok(())
        }
        Err(err) => {
            // Checkpoint blocks are not failures; the stage simply has not
            // run yet.
            if !matches!(err, StageError::Checkpoint { .. }) {
                manifest.set_status(stage, StageStatus::Failed, Some(err.to_string()));
                let _ = paths.save_manifest(&manifest);
            }
            Err(err)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ChunkRecord {
    doc_id: String,
    index: usize,
    token_start: usize,
    token_end: usize,
}

fn stage_ingest(
    paths: &RunPaths,
    config: &PipelineConfig,
    manifest: &mut RunManifest,
) -> Result<StageStatus, StageError> {
    let docs = ingest_corpus(&config.corpus_dir)?;
    let mut chunk_table = Vec::new();
    for doc in &docs {
        for chunk in chunk_document(doc, config.chunking.size, config.chunking.overlap)? {
            chunk_table.push(ChunkRecord {
                doc_id: chunk.doc_id,
                index: chunk.index,
                token_start: chunk.token_start,
                token_end: chunk.token_end,
            });
        }
    }
    write_json(&paths.documents(), &docs).map_err(|e| io_err(&paths.documents(), e))?;
    write_json(&paths.chunks(), &chunk_table).map_err(|e| io_err(&paths.chunks(), e))?;
    manifest.record_artifact(Stage::Ingest, "corpus/documents.json");
    manifest.record_artifact(Stage::Ingest, "corpus/chunks.json");
    Ok(StageStatus::Done)
}

fn stage_gencq(
    paths: &RunPaths,
    config: &PipelineConfig,
    backend: &dyn ChatBackend,
    manifest: &mut RunManifest,
) -> Result<StageStatus, StageError> {
    let cqs = generate_cqs(backend, &config.generation_params(), &config.domain_prompt)?;
    write_json(&paths.cq_generated(), &cqs).map_err(|e| io_err(&paths.cq_generated(), e))?;
    export_for_review(&cqs, &paths.review_file())?;
    manifest.record_artifact(Stage::Gencq, "cqs/generated.json");
    manifest.record_artifact(Stage::Gencq, "cqs/review.tsv");
    // The stage-2 checkpoint: a human must review before anything moves on.
    Ok(StageStatus::AwaitingReview)
}

/// Re-exports the editable review file from the latest question set.
pub fn export_review(paths: &RunPaths, out: Option<&Path>) -> Result<(), StageError> {
    let cqs = load_latest_cqs(paths)?;
    let target = out.map(Path::to_path_buf).unwrap_or_else(|| paths.review_file());
    export_for_review(&cqs, &target)?;
    Ok(())
}

/// Imports the human-reviewed file, writes the reviewed set, and resolves
/// the gencq checkpoint.
pub fn import_review(paths: &RunPaths, file: Option<&Path>) -> Result<CqSet, StageError> {
    let baseline = load_latest_cqs(paths)?;
    let review_path = file.map(Path::to_path_buf).unwrap_or_else(|| paths.review_file());
    let reviewed = import_reviewed(&review_path, &baseline)?;
    write_json(&paths.cq_reviewed(), &reviewed).map_err(|e| io_err(&paths.cq_reviewed(), e))?;
    let mut manifest = paths.load_manifest()?;
    manifest.set_status(Stage::Gencq, StageStatus::Done, None);
    manifest.record_artifact(Stage::Gencq, "cqs/reviewed.json");
    paths.save_manifest(&manifest)?;
    Ok(reviewed)
}

fn load_latest_cqs(paths: &RunPaths) -> Result<CqSet, StageError> {
    let path = if paths.cq_reviewed().exists() {
        paths.cq_reviewed()
    } else {
        paths.cq_generated()
    };
    read_json(&path).map_err(|e| io_err(&path, e))
}

fn load_reviewed_cqs(paths: &RunPaths) -> Result<CqSet, StageError> {
    let path = paths.cq_reviewed();
    if !path.exists() {
        return Err(StageError::Checkpoint {
            stage: Stage::Gencq,
            message: "no reviewed question set; run review-import first".into(),
        });
    }
    read_json(&path).map_err(|e| io_err(&path, e))
}

fn load_documents(paths: &RunPaths) -> Result<Vec<Document>, StageError> {
    read_json(&paths.documents()).map_err(|e| io_err(&paths.documents(), e))
}

fn stage_ontology(
    paths: &RunPaths,
    config: &PipelineConfig,
    backend: &dyn ChatBackend,
    manifest: &mut RunManifest,
) -> Result<StageStatus, StageError> {
    let cqs = load_reviewed_cqs(paths)?;
    let params = config.generation_params();
    let concept_set = extract_concept_set(backend, &params, &cqs)?;
    write_json(&paths.concept_set(), &concept_set)
        .map_err(|e| io_err(&paths.concept_set(), e))?;

    let foundation = load_foundation(config.foundation_path.as_deref())?;
    let raw = draft_ontology(backend, &params, &concept_set, &config.base_iri, &foundation)?;
    let spec = normalize_ontology(
        &raw,
        &concept_set,
        &config.base_iri,
        &config.base_prefix,
        &foundation,
    );
    crate::util::atomic_write(
        &paths.ontology_ttl(),
        serialize_turtle(&spec.graph).as_bytes(),
    )
    .map_err(|e| io_err(&paths.ontology_ttl(), e))?;
    write_json(&paths.ontology_stats(), &spec.stats())
        .map_err(|e| io_err(&paths.ontology_stats(), e))?;
    manifest.record_artifact(Stage::Ontology, "ontology/ontology.ttl");
    manifest.record_artifact(Stage::Ontology, "ontology/stats.json");
    manifest.record_artifact(Stage::Ontology, "ontology/concepts.json");
    Ok(StageStatus::Done)
}

/// Rebuilds the ontology spec from its persisted artifacts. Normalization
/// is idempotent, so running it over the serialized graph reproduces the
/// same spec.
fn load_ontology(paths: &RunPaths, config: &PipelineConfig) -> Result<OntologySpec, StageError> {
    let text = std::fs::read_to_string(paths.ontology_ttl())
        .map_err(|e| io_err(&paths.ontology_ttl(), e))?;
    let concept_set: ConceptSet = read_json(&paths.concept_set())
        .map_err(|e| io_err(&paths.concept_set(), e))?;
    let foundation = load_foundation(config.foundation_path.as_deref())?;
    Ok(normalize_ontology(
        &text,
        &concept_set,
        &config.base_iri,
        &config.base_prefix,
        &foundation,
    ))
}

#[derive(Serialize, Deserialize)]
struct AnswerFailure {
    cq_id: String,
    doc_id: String,
    error: String,
}

fn stage_answer(
    paths: &RunPaths,
    config: &PipelineConfig,
    backend: &dyn ChatBackend,
    manifest: &mut RunManifest,
) -> Result<StageStatus, StageError> {
    let docs = load_documents(paths)?;
    let cqs = load_reviewed_cqs(paths)?;
    let index = RetrievalIndex::build(&docs, config.chunking.size, config.chunking.overlap)?;
    let dont_know = compile_dont_know(&config.dont_know_patterns);
    let params = config.generation_params();

    let pairs: Vec<(String, crate::cq::CompetencyQuestion)> = docs
        .iter()
        .flat_map(|d| cqs.questions.iter().map(|q| (d.doc_id.clone(), q.clone())))
        .collect();
    let results = run_bounded(pairs, config.backend.max_in_flight, |(doc_id, cq)| {
        let outcome = answer_cq(backend, &params, &index, &cq, &doc_id, config.retrieval_k, &dont_know);
        (doc_id, cq.cq_id.clone(), outcome)
    });

    let mut by_doc: BTreeMap<String, Vec<CqAnswer>> = BTreeMap::new();
    let mut failures: BTreeMap<String, Vec<AnswerFailure>> = BTreeMap::new();
    for (doc_id, cq_id, outcome) in results {
        match outcome {
            Ok(answer) => by_doc.entry(doc_id).or_default().push(answer),
            Err(err) => failures.entry(doc_id.clone()).or_default().push(AnswerFailure {
                cq_id,
                doc_id,
                error: err.to_string(),
            }),
        }
    }
    for doc in &docs {
        let answers = by_doc.remove(&doc.doc_id).unwrap_or_default();
        let path = paths.answers(&doc.doc_id);
        write_json(&path, &answers).map_err(|e| io_err(&path, e))?;
        if let Some(errors) = failures.get(&doc.doc_id) {
            let err_path = paths.answer_errors(&doc.doc_id);
            write_json(&err_path, errors).map_err(|e| io_err(&err_path, e))?;
        }
        manifest.record_artifact(
            Stage::Answer,
            format!("{}/{}/{}/answers.json", doc.doc_id, paths.prompt_version, paths.answer_version),
        );
    }
    Ok(StageStatus::Done)
}

fn load_answers(paths: &RunPaths, doc_id: &str) -> Result<Vec<CqAnswer>, StageError> {
    read_json(&paths.answers(doc_id)).map_err(|e| io_err(&paths.answers(doc_id), e))
}

fn stage_buildkg(
    paths: &RunPaths,
    config: &PipelineConfig,
    backend: &dyn ChatBackend,
    manifest: &mut RunManifest,
) -> Result<StageStatus, StageError> {
    let docs = load_documents(paths)?;
    let cqs = load_reviewed_cqs(paths)?;
    let ontology = load_ontology(paths, config)?;
    let params = config.generation_params();

    let doc_ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    let results = run_bounded(doc_ids, config.backend.max_in_flight, |doc_id| {
        let answers = match load_answers(paths, &doc_id) {
            Ok(answers) => answers,
            Err(err) => return (doc_id, Err(err)),
        };
        let outcome = build_kg(
            backend,
            &params,
            &cqs,
            &answers,
            &ontology,
            &doc_id,
            &config.prompt_version,
        )
        .map_err(StageError::from);
        (doc_id, outcome)
    });

    for (doc_id, outcome) in results {
        let result = outcome?;
        persist_kg(paths, &cqs, &ontology, &doc_id, &result)?;
        manifest.record_artifact(
            Stage::Buildkg,
            format!("{doc_id}/{}/{}/kg_result.json", paths.prompt_version, paths.answer_version),
        );
    }
    Ok(StageStatus::Done)
}

fn persist_kg(
    paths: &RunPaths,
    cqs: &CqSet,
    ontology: &OntologySpec,
    doc_id: &str,
    result: &KgBuildResult,
) -> Result<(), StageError> {
    let result_path = paths.kg_result(doc_id);
    write_json(&result_path, result).map_err(|e| io_err(&result_path, e))?;
    if result.status == KgStatus::Ok {
        let ttl = paths.kg_ttl(doc_id);
        crate::util::atomic_write(&ttl, serialize_turtle(&result.graph).as_bytes())
            .map_err(|e| io_err(&ttl, e))?;
        let validation = validate_kg(result, ontology)?;
        write_json(&paths.kg_validation(doc_id), &validation)
            .map_err(|e| io_err(&paths.kg_validation(doc_id), e))?;
        let links = link_individuals(result, ontology, cqs)?;
        write_json(&paths.kg_links(doc_id), &links)
            .map_err(|e| io_err(&paths.kg_links(doc_id), e))?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub individual_iri: String,
    pub cq_id: String,
    pub label_value: String,
    #[serde(flatten)]
    pub outcome: VerificationOutcome,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum VerificationOutcome {
    Checked { found: bool },
    Unevaluated { reason: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DocAlignment {
    pub status: KgStatus,
    pub matched: u32,
    pub total: u32,
    /// Two-decimal percentage, absent for no-meaningful-KG documents.
    pub percent: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunEvaluation {
    pub run_id: String,
    pub prompt_version: String,
    pub answer_version: String,
    pub disagreements: DisagreementReport,
    pub per_doc: BTreeMap<String, DocAlignment>,
}

#[derive(Serialize, Deserialize)]
struct DocVerdicts {
    answer_verdicts: Vec<VerdictRecord>,
    verifications: Vec<VerificationRecord>,
}

fn stage_evaluate(
    paths: &RunPaths,
    config: &PipelineConfig,
    backend: &dyn ChatBackend,
    manifest: &mut RunManifest,
) -> Result<StageStatus, StageError> {
    let gt_path = paths.ground_truth();
    if !gt_path.exists() {
        // The stage-6 checkpoint: evaluation needs human ground truth.
        return Err(StageError::Checkpoint {
            stage: Stage::Evaluate,
            message: format!(
                "ground-truth file {} not found; supply one with `evaluate --ground-truth`",
                gt_path.display()
            ),
        });
    }
    let ground = load_ground_truth(&gt_path)?;
    let docs = load_documents(paths)?;
    let params = config.generation_params();

    let mut answers_by_doc: BTreeMap<String, Vec<CqAnswer>> = BTreeMap::new();
    for doc in &docs {
        answers_by_doc.insert(doc.doc_id.clone(), load_answers(paths, &doc.doc_id)?);
    }

    // Judge every ground-truth pair; parse failures are recorded, not fatal.
    let judged = run_bounded(
        ground.clone(),
        config.backend.max_in_flight,
        |gt| -> Result<VerdictRecord, StageError> {
            let answer = answers_by_doc
                .get(&gt.doc_id)
                .and_then(|list| list.iter().find(|a| a.cq_id == gt.cq_id));
            let outcome = match answer {
                None => VerdictOutcome::Unevaluated {
                    reason: "no answer recorded for this pair".into(),
                },
                Some(answer) => match judge_answer(backend, &params, &gt, answer) {
                    Ok(verdict) => VerdictOutcome::Judged { verdict },
                    Err(JudgeError::Backend(err)) => return Err(StageError::Backend(err)),
                    Err(err) => VerdictOutcome::Unevaluated {
                        reason: err.to_string(),
                    },
                },
            };
            Ok(VerdictRecord {
                cq_id: gt.cq_id.clone(),
                doc_id: gt.doc_id.clone(),
                outcome,
            })
        },
    );
    let mut verdicts = Vec::with_capacity(judged.len());
    for record in judged {
        verdicts.push(record?);
    }

    // Verify KG individuals against the answers they link to.
    let mut per_doc: BTreeMap<String, DocAlignment> = BTreeMap::new();
    let mut verifications_by_doc: BTreeMap<String, Vec<VerificationRecord>> = BTreeMap::new();
    for doc in &docs {
        let result: KgBuildResult = read_json(&paths.kg_result(&doc.doc_id))
            .map_err(|e| io_err(&paths.kg_result(&doc.doc_id), e))?;
        if result.status == KgStatus::NoMeaningfulKg {
            per_doc.insert(
                doc.doc_id.clone(),
                DocAlignment {
                    status: KgStatus::NoMeaningfulKg,
                    matched: 0,
                    total: 0,
                    percent: None,
                },
            );
            continue;
        }
        let links: Vec<crate::kg::IndividualLink> = read_json(&paths.kg_links(&doc.doc_id))
            .map_err(|e| io_err(&paths.kg_links(&doc.doc_id), e))?;
        let answers = &answers_by_doc[&doc.doc_id];

        let mut records = Vec::new();
        let mut matched = 0u32;
        let mut total = 0u32;
        for individual in &result.individuals {
            let link = links
                .iter()
                .find(|l| l.individual_iri == individual.iri.as_str())
                .expect("every individual has a link record");
            if link.cq_ids.is_empty() && config.exclude_unlinked_individuals {
                continue;
            }
            total += 1;
            let Some(label) = &individual.label else {
                continue; // unverifiable, counts as unmatched
            };
            let mut found_any = false;
            for cq_id in &link.cq_ids {
                let Some(answer) = answers.iter().find(|a| &a.cq_id == cq_id) else {
                    continue;
                };
                let outcome = match verify_individual(backend, &params, label, answer) {
                    Ok(found) => {
                        found_any |= found;
                        VerificationOutcome::Checked { found }
                    }
                    Err(JudgeError::Backend(err)) => return Err(StageError::Backend(err)),
                    Err(err) => VerificationOutcome::Unevaluated {
                        reason: err.to_string(),
                    },
                };
                records.push(VerificationRecord {
                    individual_iri: individual.iri.as_str().to_string(),
                    cq_id: cq_id.clone(),
                    label_value: label.clone(),
                    outcome,
                });
            }
            if found_any {
                matched += 1;
            }
        }
        let percent = if total > 0 {
            Some(alignment_percentage(matched, total)?.to_string())
        } else {
            None
        };
        per_doc.insert(
            doc.doc_id.clone(),
            DocAlignment {
                status: KgStatus::Ok,
                matched,
                total,
                percent,
            },
        );
        verifications_by_doc.insert(doc.doc_id.clone(), records);
    }

    // Persist verdicts per document.
    for doc in &docs {
        let doc_verdicts = DocVerdicts {
            answer_verdicts: verdicts
                .iter()
                .filter(|v| v.doc_id == doc.doc_id)
                .cloned()
                .collect(),
            verifications: verifications_by_doc.remove(&doc.doc_id).unwrap_or_default(),
        };
        let path = paths.verdicts(&doc.doc_id);
        write_json(&path, &doc_verdicts).map_err(|e| io_err(&path, e))?;
    }

    let disagreements = disagreement_report(&ground, &verdicts)?;
    let evaluation = RunEvaluation {
        run_id: manifest.run_id.clone(),
        prompt_version: paths.prompt_version.clone(),
        answer_version: paths.answer_version.clone(),
        disagreements,
        per_doc,
    };
    write_json(&paths.evaluation_report(), &evaluation)
        .map_err(|e| io_err(&paths.evaluation_report(), e))?;
    manifest.record_artifact(Stage::Evaluate, "evaluation/report.json");
    Ok(StageStatus::Done)
}

/// Reconstructs the manifest from the artifacts on disk. Stage statuses are
/// derived from which files exist; once a stage is not done, everything
/// after it is pending so it will re-run. Idempotent: resuming twice
/// changes nothing.
pub fn resume(runs_dir: &Path, run_id: &str) -> Result<RunManifest, StageError> {
    let (paths, _config, mut manifest) = open_run(runs_dir, run_id)?;

    let docs: Option<Vec<Document>> = read_json(&paths.documents()).ok();
    let mut derived: BTreeMap<Stage, StageStatus> = BTreeMap::new();
    derived.insert(
        Stage::Ingest,
        if paths.documents().exists() && paths.chunks().exists() {
            StageStatus::Done
        } else {
            StageStatus::Pending
        },
    );
    derived.insert(
        Stage::Gencq,
        if paths.cq_reviewed().exists() {
            StageStatus::Done
        } else if paths.cq_generated().exists() {
            StageStatus::AwaitingReview
        } else {
            StageStatus::Pending
        },
    );
    derived.insert(
        Stage::Ontology,
        if paths.ontology_ttl().exists()
            && paths.ontology_stats().exists()
            && paths.concept_set().exists()
        {
            StageStatus::Done
        } else {
            StageStatus::Pending
        },
    );
    let all_docs_have = |f: &dyn Fn(&str) -> std::path::PathBuf| -> bool {
        docs.as_ref().is_some_and(|docs| {
            !docs.is_empty() && docs.iter().all(|d| f(&d.doc_id).exists())
        })
    };
    derived.insert(
        Stage::Answer,
        if all_docs_have(&|d| paths.answers(d)) {
            StageStatus::Done
        } else {
            StageStatus::Pending
        },
    );
    derived.insert(
        Stage::Buildkg,
        if all_docs_have(&|d| paths.kg_result(d)) {
            StageStatus::Done
        } else {
            StageStatus::Pending
        },
    );
    derived.insert(
        Stage::Evaluate,
        if paths.evaluation_report().exists() {
            StageStatus::Done
        } else {
            StageStatus::Pending
        },
    );

    // A stage is only done if everything before it is done; otherwise it
    // (and its descendants) must re-run even when artifacts linger.
    let mut chain_broken = false;
    for stage in Stage::ALL {
        let status = derived.get_mut(&stage).expect("all stages derived");
        if chain_broken && *status == StageStatus::Done {
            *status = StageStatus::Pending;
        }
        if *status != StageStatus::Done {
            chain_broken = true;
        }
    }

    let changed = Stage::ALL
        .iter()
        .any(|s| manifest.status(*s) != &derived[s]);
    if changed {
        for stage in Stage::ALL {
            if manifest.status(stage) != &derived[&stage] {
                manifest.set_status(stage, derived[&stage].clone(), None);
            }
        }
        paths.save_manifest(&manifest)?;
    }
    Ok(manifest)
}

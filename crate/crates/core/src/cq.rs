//! Competency question generation and the human review checkpoint.
//!
//! Generated questions are exported to a tab-separated file a reviewer can
//! edit freely: change text, delete lines, append new ones. Importing the
//! file derives statuses by comparing against the exported baseline, so the
//! review step is auditable and diffable. Downstream stages only accept a
//! question set that went through at least one review round.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ChatBackend, ChatRequest, GenerationParams, StageTag};
use crate::prompts;

#[derive(Debug, Error)]
pub enum CqError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no questions could be parsed from the generation response:\n{raw}")]
    GenerationParse { raw: String },
    #[error("cannot write review file {path}: {source}")]
    Unwritable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read review file {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed review line {line}: expected `cq_id<TAB>status<TAB>text`")]
    MalformedLine { line: usize },
    #[error("review file contains no questions")]
    EmptyReview,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CqStatus {
    Generated,
    Edited,
    Added,
    Approved,
}

impl CqStatus {
    fn as_str(self) -> &'static str {
        match self {
            CqStatus::Generated => "generated",
            CqStatus::Edited => "edited",
            CqStatus::Added => "added",
            CqStatus::Approved => "approved",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Llm,
    Human,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompetencyQuestion {
    pub cq_id: String,
    pub text: String,
    pub status: CqStatus,
    pub provenance: Provenance,
}

impl CompetencyQuestion {
    /// Questions that passed (or were created by) human review.
    pub fn is_reviewed(&self) -> bool {
        !matches!(self.status, CqStatus::Generated)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CqSet {
    pub questions: Vec<CompetencyQuestion>,
    pub review_round: u32,
}

impl CqSet {
    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn get(&self, cq_id: &str) -> Option<&CompetencyQuestion> {
        self.questions.iter().find(|q| q.cq_id == cq_id)
    }
}

/// Asks the backend for competency questions and parses the response: each
/// line ending in `?` becomes one question (numbering and bullets
/// stripped), case-folded duplicates removed keeping the first occurrence.
pub fn generate_cqs(
    backend: &dyn ChatBackend,
    params: &GenerationParams,
    domain_prompt: &str,
) -> Result<CqSet, CqError> {
    let prompt = prompts::render(prompts::CQ_GENERATE, &[("domain", domain_prompt)]);
    let request = ChatRequest::new(prompt, params.clone(), StageTag::CqGen);
    let response = backend.complete(&request)?;
    let questions = parse_question_lines(&response.text);
    if questions.is_empty() {
        return Err(CqError::GenerationParse {
            raw: response.text,
        });
    }
    Ok(CqSet {
        questions: questions
            .into_iter()
            .enumerate()
            .map(|(i, text)| CompetencyQuestion {
                cq_id: format!("CQ{}", i + 1),
                text,
                status: CqStatus::Generated,
                provenance: Provenance::Llm,
            })
            .collect(),
        review_round: 0,
    })
}

fn parse_question_lines(text: &str) -> Vec<String> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    for line in text.lines() {
        let stripped = strip_list_marker(line.trim());
        if !stripped.ends_with('?') {
            continue;
        }
        let folded = stripped.to_lowercase();
        if seen.insert(folded) {
            out.push(stripped.to_string());
        }
    }
    out
}

/// Removes leading bullets (`-`, `*`), numbering (`3.`, `3)`), or `CQ3:`
/// style markers.
fn strip_list_marker(line: &str) -> &str {
    let trimmed = line.trim_start_matches(['-', '*', '•']).trim_start();
    let rest = trimmed
        .strip_prefix("CQ")
        .map(|r| r.trim_start_matches(|c: char| c.is_ascii_digit()))
        .filter(|r| r.starts_with([':', '.']))
        .map(|r| r[1..].trim_start())
        .unwrap_or(trimmed);
    let numberless = rest
        .find(|c: char| !c.is_ascii_digit())
        .filter(|&pos| pos > 0 && (rest.as_bytes()[pos] == b'.' || rest.as_bytes()[pos] == b')'))
        .map(|pos| rest[pos + 1..].trim_start())
        .unwrap_or(rest);
    numberless
}

const REVIEW_HEADER: &str = "# cq_id\tstatus\ttext";

/// Writes the editable review file: one `cq_id<TAB>status<TAB>text` line per
/// question under a comment header. Re-exporting an unchanged set is
/// byte-identical.
pub fn export_for_review(cqs: &CqSet, path: &Path) -> Result<(), CqError> {
    let mut out = String::from(REVIEW_HEADER);
    out.push('\n');
    for q in &cqs.questions {
        out.push_str(&format!("{}\t{}\t{}\n", q.cq_id, q.status.as_str(), q.text));
    }
    crate::util::atomic_write(path, out.as_bytes()).map_err(|source| CqError::Unwritable {
        path: path.display().to_string(),
        source,
    })
}

/// Imports a reviewed file against the exported baseline. Lines whose text
/// matches the baseline become `approved`; changed text becomes `edited`;
/// unknown ids become `added`. Ids are re-densified in file order and the
/// review round advances.
pub fn import_reviewed(path: &Path, baseline: &CqSet) -> Result<CqSet, CqError> {
    let body = std::fs::read_to_string(path).map_err(|source| CqError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    let mut questions = Vec::new();
    for (line_no, line) in body.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (id, _status, text) = match (fields.next(), fields.next(), fields.next()) {
            (Some(id), Some(status), Some(text)) if !id.is_empty() && !status.is_empty() => {
                (id, status, text.trim())
            }
            _ => return Err(CqError::MalformedLine { line: line_no + 1 }),
        };
        if text.is_empty() {
            return Err(CqError::MalformedLine { line: line_no + 1 });
        }
        let (status, provenance) = match baseline.get(id) {
            Some(original) if original.text == text => (CqStatus::Approved, original.provenance),
            Some(_) => (CqStatus::Edited, Provenance::Human),
            None => (CqStatus::Added, Provenance::Human),
        };
        questions.push(CompetencyQuestion {
            cq_id: String::new(), // assigned below
            text: text.to_string(),
            status,
            provenance,
        });
    }
    if questions.is_empty() {
        return Err(CqError::EmptyReview);
    }
    for (i, q) in questions.iter_mut().enumerate() {
        q.cq_id = format!("CQ{}", i + 1);
    }
    Ok(CqSet {
        questions,
        review_round: baseline.review_round + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{default_params, ChatResponse};

    struct Canned(&'static str);

    impl ChatBackend for Canned {
        fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
            Ok(ChatResponse {
                text: self.0.to_string(),
                backend_id: "canned".into(),
                fingerprint: request.fingerprint(),
            })
        }
        fn id(&self) -> &str {
            "canned"
        }
    }

    fn generate(raw: &'static str) -> Result<CqSet, CqError> {
        generate_cqs(&Canned(raw), &default_params("m"), "test domain")
    }

    #[test]
    fn forty_numbered_questions_become_dense_ids() {
        let raw: String = (1..=40)
            .map(|i| format!("{i}. What is property number {i} of the pipeline?\n"))
            .collect();
        let raw: &'static str = Box::leak(raw.into_boxed_str());
        let set = generate(raw).unwrap();
        assert_eq!(set.len(), 40);
        assert_eq!(set.questions[0].cq_id, "CQ1");
        assert_eq!(set.questions[39].cq_id, "CQ40");
        assert!(set.questions.iter().all(|q| q.status == CqStatus::Generated));
        assert_eq!(set.review_round, 0);
    }

    #[test]
    fn duplicate_questions_collapse_case_insensitively() {
        let set = generate("1. What models are used?\n2. WHAT MODELS ARE USED?\n").unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.questions[0].text, "What models are used?");
    }

    #[test]
    fn prose_without_questions_is_a_parse_error() {
        let err = generate("The pipeline has many interesting properties.\nIndeed.").unwrap_err();
        assert!(matches!(err, CqError::GenerationParse { .. }));
    }

    #[test]
    fn bullets_and_cq_markers_are_stripped() {
        let set = generate("- What data is used?\n* CQ2: What models are used?\n3) Who ran it?\n")
            .unwrap();
        let texts: Vec<&str> = set.questions.iter().map(|q| q.text.as_str()).collect();
        assert_eq!(
            texts,
            ["What data is used?", "What models are used?", "Who ran it?"]
        );
    }

    fn sample_set() -> CqSet {
        generate("1. What data formats are used?\n2. What models are used?\n").unwrap()
    }

    #[test]
    fn export_import_round_trip_approves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("review.tsv");
        let set = sample_set();
        export_for_review(&set, &path).unwrap();

        let imported = import_reviewed(&path, &set).unwrap();
        assert_eq!(imported.len(), set.len());
        assert!(imported.questions.iter().all(|q| q.status == CqStatus::Approved));
        assert_eq!(imported.review_round, 1);
        let texts: Vec<_> = imported.questions.iter().map(|q| &q.text).collect();
        let original: Vec<_> = set.questions.iter().map(|q| &q.text).collect();
        assert_eq!(texts, original);
    }

    #[test]
    fn edits_deletions_and_additions_are_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("review.tsv");
        let set = sample_set();
        export_for_review(&set, &path).unwrap();

        let edited = "# cq_id\tstatus\ttext\n\
                      CQ1\tgenerated\tWhat data formats feed the pipeline?\n\
                      CQ2\tgenerated\tWhat models are used?\n\
                      CQ3\tadded\tWho funded the study?\n";
        std::fs::write(&path, edited).unwrap();

        let imported = import_reviewed(&path, &set).unwrap();
        assert_eq!(imported.len(), 3);
        assert_eq!(imported.questions[0].status, CqStatus::Edited);
        assert_eq!(imported.questions[0].provenance, Provenance::Human);
        assert_eq!(imported.questions[1].status, CqStatus::Approved);
        assert_eq!(imported.questions[2].status, CqStatus::Added);
        assert_eq!(imported.questions[2].cq_id, "CQ3");
    }

    #[test]
    fn two_appended_questions_grow_a_forty_set_to_forty_two() {
        let raw: String = (1..=40)
            .map(|i| format!("{i}. What is property number {i} of the pipeline?\n"))
            .collect();
        let raw: &'static str = Box::leak(raw.into_boxed_str());
        let set = generate(raw).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("review.tsv");
        export_for_review(&set, &path).unwrap();
        let mut body = std::fs::read_to_string(&path).unwrap();
        body.push_str("CQ41\tadded\tWhat license covers the data?\n");
        body.push_str("CQ42\tadded\tWhere is the code archived?\n");
        std::fs::write(&path, body).unwrap();
        let imported = import_reviewed(&path, &set).unwrap();
        assert_eq!(imported.len(), 42);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("review.tsv");
        std::fs::write(&path, "# header\nCQ1\tgenerated\tFine?\nnot tab separated\n").unwrap();
        let err = import_reviewed(&path, &sample_set()).unwrap_err();
        match err {
            CqError::MalformedLine { line } => assert_eq!(line, 3),
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn deleting_every_line_is_an_empty_review_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("review.tsv");
        std::fs::write(&path, "# cq_id\tstatus\ttext\n").unwrap();
        assert!(matches!(
            import_reviewed(&path, &sample_set()),
            Err(CqError::EmptyReview)
        ));
    }

    #[test]
    fn empty_set_exports_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("review.tsv");
        export_for_review(&CqSet::default(), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "# cq_id\tstatus\ttext\n");
    }

    #[test]
    fn export_import_export_is_a_fixed_point() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("review.tsv");
        let set = sample_set();
        export_for_review(&set, &path).unwrap();

        let imported = import_reviewed(&path, &set).unwrap();
        let first_post_review = dir.path().join("round1.tsv");
        export_for_review(&imported, &first_post_review).unwrap();

        let reimported = import_reviewed(&first_post_review, &imported).unwrap();
        let second = dir.path().join("round2.tsv");
        export_for_review(&reimported, &second).unwrap();

        assert_eq!(
            std::fs::read(&first_post_review).unwrap(),
            std::fs::read(&second).unwrap()
        );
    }

    #[test]
    fn reexport_without_changes_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.tsv");
        let b = dir.path().join("b.tsv");
        let set = sample_set();
        export_for_review(&set, &a).unwrap();
        export_for_review(&set, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}

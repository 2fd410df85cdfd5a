//! Judge-model evaluation: scoring answers against human ground truth on a
//! 0-10 scale, three-way classification, True/False verification of
//! knowledge-graph individuals, and disagreement/alignment reporting.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answering::CqAnswer;
use crate::backend::{BackendError, ChatBackend, ChatRequest, GenerationParams, StageTag};
use crate::prompts;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("score out of range 0-10: {0}")]
    ScoreOutOfRange(i64),
    #[error("cannot parse a score from the judge response:\n{raw}")]
    VerdictParse { raw: String },
    #[error("cannot parse True/False from the verification response:\n{raw}")]
    VerificationParse { raw: String },
    #[error("answer ({answer_cq}, {answer_doc}) does not match ground truth ({gt_cq}, {gt_doc})")]
    PairMismatch {
        answer_cq: String,
        answer_doc: String,
        gt_cq: String,
        gt_doc: String,
    },
    #[error("ground truth and verdicts do not align; missing keys: {missing:?}")]
    Misaligned { missing: Vec<String> },
    #[error("matched ({matched}) exceeds total ({total})")]
    MatchedExceedsTotal { matched: u32, total: u32 },
    #[error("alignment percentage needs total >= 1")]
    EmptyTotal,
    #[error("cannot read ground truth {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed ground-truth line {line}: {message}")]
    MalformedGroundTruth { line: usize, message: String },
    #[error("duplicate ground-truth record for ({cq_id}, {doc_id})")]
    DuplicateGroundTruth { cq_id: String, doc_id: String },
}

/// Three-way answer quality label, ordered Wrong < Partial < Right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Wrong,
    Partial,
    Right,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Right => "Right",
            Label::Wrong => "Wrong",
            Label::Partial => "Partial",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s.trim().to_lowercase().as_str() {
            "right" => Some(Label::Right),
            "wrong" => Some(Label::Wrong),
            "partial" => Some(Label::Partial),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            Label::Wrong => 0,
            Label::Partial => 1,
            Label::Right => 2,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Threshold classification: scores of six and above are Right, below
/// three Wrong, the rest Partial.
pub fn classify(score: i64) -> Result<Label, JudgeError> {
    if !(0..=10).contains(&score) {
        return Err(JudgeError::ScoreOutOfRange(score));
    }
    Ok(if score >= 6 {
        Label::Right
    } else if score < 3 {
        Label::Wrong
    } else {
        Label::Partial
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub cq_id: String,
    pub doc_id: String,
    pub text: String,
    pub human_label: Label,
}

/// Loads the human-authored ground-truth TSV:
/// `cq_id<TAB>doc_id<TAB>label<TAB>text`, one record per (cq, doc).
pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruth>, JudgeError> {
    let body = std::fs::read_to_string(path).map_err(|source| JudgeError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (line_no, line) in body.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(JudgeError::MalformedGroundTruth {
                line: line_no + 1,
                message: "expected cq_id<TAB>doc_id<TAB>label<TAB>text".into(),
            });
        }
        let label = Label::parse(fields[2]).ok_or_else(|| JudgeError::MalformedGroundTruth {
            line: line_no + 1,
            message: format!("unknown label `{}`", fields[2]),
        })?;
        let record = GroundTruth {
            cq_id: fields[0].trim().to_string(),
            doc_id: fields[1].trim().to_string(),
            text: fields[3].trim().to_string(),
            human_label: label,
        };
        if !seen.insert((record.cq_id.clone(), record.doc_id.clone())) {
            return Err(JudgeError::DuplicateGroundTruth {
                cq_id: record.cq_id,
                doc_id: record.doc_id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub score: u8,
    pub explanation: String,
    pub label: Label,
}

/// Scores one answer against its ground truth. The response must carry a
/// `score: <int>` line; the explanation is optional.
pub fn judge_answer(
    backend: &dyn ChatBackend,
    params: &GenerationParams,
    ground_truth: &GroundTruth,
    answer: &CqAnswer,
) -> Result<JudgeVerdict, JudgeError> {
    if ground_truth.cq_id != answer.cq_id || ground_truth.doc_id != answer.doc_id {
        return Err(JudgeError::PairMismatch {
            answer_cq: answer.cq_id.clone(),
            answer_doc: answer.doc_id.clone(),
            gt_cq: ground_truth.cq_id.clone(),
            gt_doc: ground_truth.doc_id.clone(),
        });
    }
    let prompt = prompts::render(
        prompts::JUDGE_ANSWER,
        &[
            ("question", ground_truth.cq_id.as_str()),
            ("ground_truth", ground_truth.text.as_str()),
            ("prediction", answer.clean_text.as_str()),
        ],
    );
    let request = ChatRequest::new(prompt, params.clone(), StageTag::JudgeAnswer);
    let response = backend.complete(&request)?;
    parse_verdict(&response.text)
}

pub fn parse_verdict(text: &str) -> Result<JudgeVerdict, JudgeError> {
    let score_re = regex::Regex::new(r"(?mi)^\s*score\s*:\s*(.+?)\s*$").expect("static pattern");
    let captured = score_re
        .captures(text)
        .and_then(|c| c.get(1))
        .ok_or_else(|| JudgeError::VerdictParse {
            raw: text.to_string(),
        })?;
    let score: i64 = captured
        .as_str()
        .trim()
        .parse()
        .map_err(|_| JudgeError::VerdictParse {
            raw: text.to_string(),
        })?;
    let label = classify(score)?;
    let explanation = regex::Regex::new(r"(?msi)^\s*explanation\s*:\s*(.*)$")
        .expect("static pattern")
        .captures(text)
        .and_then(|c| c.get(1))
        .map(|m| m.as_str().trim().to_string())
        .unwrap_or_default();
    Ok(JudgeVerdict {
        score: score as u8,
        explanation,
        label,
    })
}

/// Asks the judge whether an individual's label content appears in the
/// answer text; parses the `Response: True|False` line.
pub fn verify_individual(
    backend: &dyn ChatBackend,
    params: &GenerationParams,
    label_value: &str,
    answer: &CqAnswer,
) -> Result<bool, JudgeError> {
    let prompt = prompts::render(
        prompts::JUDGE_VERIFY,
        &[("value", label_value), ("answer", answer.clean_text.as_str())],
    );
    let request = ChatRequest::new(prompt, params.clone(), StageTag::JudgeKg);
    let response = backend.complete(&request)?;
    parse_verification(&response.text)
}

pub fn parse_verification(text: &str) -> Result<bool, JudgeError> {
    let re = regex::Regex::new(r"(?mi)^\s*response\s*:\s*(\S+)").expect("static pattern");
    let word = re
        .captures(text)
        .and_then(|c| c.get(1))
        .map(|m| m.as_str().trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .ok_or_else(|| JudgeError::VerificationParse {
            raw: text.to_string(),
        })?;
    match word.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(JudgeError::VerificationParse {
            raw: text.to_string(),
        }),
    }
}

/// The judged outcome for one (cq, doc) pair; parse failures become
/// `Unevaluated` and are excluded from totals rather than defaulted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum VerdictOutcome {
    Judged { verdict: JudgeVerdict },
    Unevaluated { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub cq_id: String,
    pub doc_id: String,
    #[serde(flatten)]
    pub outcome: VerdictOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisagreementReport {
    pub disagreement_count: u32,
    pub total: u32,
    /// confusion[human][judge] over Wrong/Partial/Right.
    pub confusion: [[u32; 3]; 3],
    pub unevaluated: Vec<String>,
}

/// Compares human labels against judge labels pair by pair. Every ground
/// truth key must have a verdict record and vice versa.
pub fn disagreement_report(
    ground: &[GroundTruth],
    verdicts: &[VerdictRecord],
) -> Result<DisagreementReport, JudgeError> {
    let key = |cq: &str, doc: &str| format!("({cq}, {doc})");
    let ground_map: BTreeMap<(String, String), &GroundTruth> = ground
        .iter()
        .map(|g| ((g.cq_id.clone(), g.doc_id.clone()), g))
        .collect();
    let verdict_map: BTreeMap<(String, String), &VerdictRecord> = verdicts
        .iter()
        .map(|v| ((v.cq_id.clone(), v.doc_id.clone()), v))
        .collect();

    let mut missing: Vec<String> = Vec::new();
    for k in ground_map.keys() {
        if !verdict_map.contains_key(k) {
            missing.push(key(&k.0, &k.1));
        }
    }
    for k in verdict_map.keys() {
        if !ground_map.contains_key(k) {
            missing.push(key(&k.0, &k.1));
        }
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(JudgeError::Misaligned { missing });
    }

    let mut report = DisagreementReport {
        disagreement_count: 0,
        total: 0,
        confusion: [[0; 3]; 3],
        unevaluated: Vec::new(),
    };
    for (k, gt) in &ground_map {
        match &verdict_map[k].outcome {
            VerdictOutcome::Judged { verdict } => {
                report.total += 1;
                report.confusion[gt.human_label.index()][verdict.label.index()] += 1;
                if gt.human_label != verdict.label {
                    report.disagreement_count += 1;
                }
            }
            VerdictOutcome::Unevaluated { .. } => report.unevaluated.push(key(&k.0, &k.1)),
        }
    }
    Ok(report)
}

/// Percentage with two decimal places, rounded half-up, kept as integer
/// hundredths so rendering is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Percent(pub u32);

impl Percent {
    pub fn hundredths(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

/// matched / total × 100, rounded half-up to two decimals.
pub fn alignment_percentage(matched: u32, total: u32) -> Result<Percent, JudgeError> {
    if total == 0 {
        return Err(JudgeError::EmptyTotal);
    }
    if matched > total {
        return Err(JudgeError::MatchedExceedsTotal { matched, total });
    }
    let numerator = matched as u64 * 10_000;
    let quotient = numerator / total as u64;
    let remainder = numerator % total as u64;
    let rounded = if remainder * 2 >= total as u64 {
        quotient + 1
    } else {
        quotient
    };
    Ok(Percent(rounded as u32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_thresholds() {
        assert_eq!(classify(6).unwrap(), Label::Right);
        assert_eq!(classify(2).unwrap(), Label::Wrong);
        assert_eq!(classify(3).unwrap(), Label::Partial);
        assert_eq!(classify(5).unwrap(), Label::Partial);
        assert_eq!(classify(0).unwrap(), Label::Wrong);
        assert_eq!(classify(10).unwrap(), Label::Right);
        assert!(classify(11).is_err());
        assert!(classify(-1).is_err());
    }

    #[test]
    fn classify_exhaustive_and_monotone() {
        let expected = [
            Label::Wrong,
            Label::Wrong,
            Label::Wrong,
            Label::Partial,
            Label::Partial,
            Label::Partial,
            Label::Right,
            Label::Right,
            Label::Right,
            Label::Right,
            Label::Right,
        ];
        let labels: Vec<Label> = (0..=10).map(|s| classify(s).unwrap()).collect();
        assert_eq!(labels, expected);
        for pair in labels.windows(2) {
            assert!(pair[0] <= pair[1], "not monotone at {pair:?}");
        }
    }

    #[test]
    fn verdict_parsing() {
        let verdict = parse_verdict("score: 7\nExplanation: close match on all terms.").unwrap();
        assert_eq!(verdict.score, 7);
        assert_eq!(verdict.label, Label::Right);
        assert_eq!(verdict.explanation, "close match on all terms.");

        assert!(matches!(
            parse_verdict("score: eleven"),
            Err(JudgeError::VerdictParse { .. })
        ));
        assert!(matches!(
            parse_verdict("score: 11"),
            Err(JudgeError::ScoreOutOfRange(11))
        ));
        assert!(matches!(
            parse_verdict("no score line here"),
            Err(JudgeError::VerdictParse { .. })
        ));
    }

    #[test]
    fn verification_parsing() {
        assert!(parse_verification("Response: True\nExplanation: found it.").unwrap());
        assert!(!parse_verification("response: FALSE").unwrap());
        assert!(matches!(
            parse_verification("Response: maybe"),
            Err(JudgeError::VerificationParse { .. })
        ));
        assert!(matches!(
            parse_verification("nothing to see"),
            Err(JudgeError::VerificationParse { .. })
        ));
    }

    fn gt(cq: &str, doc: &str, label: Label) -> GroundTruth {
        GroundTruth {
            cq_id: cq.into(),
            doc_id: doc.into(),
            text: format!("ground truth for {cq}/{doc}"),
            human_label: label,
        }
    }

    fn judged(cq: &str, doc: &str, label: Label) -> VerdictRecord {
        let score = match label {
            Label::Right => 8,
            Label::Partial => 4,
            Label::Wrong => 1,
        };
        VerdictRecord {
            cq_id: cq.into(),
            doc_id: doc.into(),
            outcome: VerdictOutcome::Judged {
                verdict: JudgeVerdict {
                    score,
                    explanation: String::new(),
                    label,
                },
            },
        }
    }

    #[test]
    fn identical_labels_mean_zero_disagreements() {
        let ground: Vec<GroundTruth> = (0..10).map(|i| gt(&format!("CQ{i}"), "d", Label::Right)).collect();
        let verdicts: Vec<VerdictRecord> =
            (0..10).map(|i| judged(&format!("CQ{i}"), "d", Label::Right)).collect();
        let report = disagreement_report(&ground, &verdicts).unwrap();
        assert_eq!(report.disagreement_count, 0);
        assert_eq!(report.total, 10);
    }

    #[test]
    fn planted_mismatches_are_counted() {
        // 200 pairs, 42 of them flipped: the reference-scale fixture.
        let labels = [Label::Right, Label::Partial, Label::Wrong];
        let mut ground = Vec::new();
        let mut verdicts = Vec::new();
        for i in 0..200u32 {
            let cq = format!("CQ{}", i / 5 + 1);
            let doc = format!("doc{}", i % 5 + 1);
            let human = labels[(i % 3) as usize];
            ground.push(gt(&cq, &doc, human));
            let judge_label = if i < 42 {
                labels[((i + 1) % 3) as usize]
            } else {
                human
            };
            verdicts.push(judged(&cq, &doc, judge_label));
        }
        let report = disagreement_report(&ground, &verdicts).unwrap();
        assert_eq!(report.disagreement_count, 42);
        assert_eq!(report.total, 200);

        // Confusion rows sum to the human label counts.
        for (row, label) in [Label::Wrong, Label::Partial, Label::Right].iter().enumerate() {
            let expected = ground.iter().filter(|g| g.human_label == *label).count() as u32;
            let sum: u32 = report.confusion[row].iter().sum();
            assert_eq!(sum, expected);
        }
    }

    #[test]
    fn unevaluated_pairs_are_excluded_from_total() {
        let ground = vec![gt("CQ1", "d", Label::Right), gt("CQ2", "d", Label::Wrong)];
        let verdicts = vec![
            judged("CQ1", "d", Label::Right),
            VerdictRecord {
                cq_id: "CQ2".into(),
                doc_id: "d".into(),
                outcome: VerdictOutcome::Unevaluated {
                    reason: "score parse failure".into(),
                },
            },
        ];
        let report = disagreement_report(&ground, &verdicts).unwrap();
        assert_eq!(report.total, 1);
        assert_eq!(report.unevaluated, ["(CQ2, d)"]);
    }

    #[test]
    fn misaligned_keys_are_errors() {
        let ground = vec![gt("CQ1", "d", Label::Right)];
        let verdicts = vec![judged("CQ2", "d", Label::Right)];
        let err = disagreement_report(&ground, &verdicts).unwrap_err();
        match err {
            JudgeError::Misaligned { missing } => {
                assert_eq!(missing, ["(CQ1, d)", "(CQ2, d)"]);
            }
            other => panic!("expected Misaligned, got {other:?}"),
        }
    }

    #[test]
    fn alignment_percentages_round_half_up() {
        assert_eq!(alignment_percentage(142, 203).unwrap().to_string(), "69.95");
        assert_eq!(alignment_percentage(9, 37).unwrap().to_string(), "24.32");
        assert_eq!(alignment_percentage(0, 37).unwrap().to_string(), "0.00");
        assert_eq!(alignment_percentage(1, 1).unwrap().to_string(), "100.00");
        assert_eq!(alignment_percentage(1, 8).unwrap().to_string(), "12.50");
        // 3/800 = 0.375%, an exact half at two decimals: rounds up to 0.38.
        assert_eq!(alignment_percentage(3, 800).unwrap().to_string(), "0.38");
        // 1/3200 = 0.03125%: below the half, rounds down to 0.03.
        assert_eq!(alignment_percentage(1, 3200).unwrap().to_string(), "0.03");
        assert!(alignment_percentage(2, 1).is_err());
        assert!(alignment_percentage(0, 0).is_err());
    }

    #[test]
    fn ground_truth_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.tsv");
        std::fs::write(
            &path,
            "# comment\nCQ1\tdoc1\tRight\tThe format was a spectrogram.\nCQ2\tdoc1\tpartial\tBatch size 32.\n",
        )
        .unwrap();
        let records = load_ground_truth(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].human_label, Label::Right);
        assert_eq!(records[1].human_label, Label::Partial);
    }

    #[test]
    fn ground_truth_rejects_bad_labels_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.tsv");
        std::fs::write(&path, "CQ1\tdoc1\tMaybe\ttext\n").unwrap();
        assert!(matches!(
            load_ground_truth(&path),
            Err(JudgeError::MalformedGroundTruth { line: 1, .. })
        ));

        std::fs::write(&path, "CQ1\td\tRight\ta\nCQ1\td\tWrong\tb\n").unwrap();
        assert!(matches!(
            load_ground_truth(&path),
            Err(JudgeError::DuplicateGroundTruth { .. })
        ));
    }

    #[test]
    fn scripted_judge_round_trip() {
        use crate::backend::{default_params, ScriptedBackend};
        let ground = gt("CQ1", "doc1", Label::Right);
        let answer = CqAnswer {
            cq_id: "CQ1".into(),
            doc_id: "doc1".into(),
            raw_text: ground.text.clone(),
            clean_text: ground.text.clone(),
            context_chunks: vec![],
            answered: true,
        };
        let verdict =
            judge_answer(&ScriptedBackend, &default_params("m"), &ground, &answer).unwrap();
        assert_eq!(verdict.score, 10);
        assert_eq!(verdict.label, Label::Right);

        let found = verify_individual(
            &ScriptedBackend,
            &default_params("m"),
            "ground truth",
            &answer,
        )
        .unwrap();
        assert!(found);
        let not_found = verify_individual(
            &ScriptedBackend,
            &default_params("m"),
            "absent value",
            &answer,
        )
        .unwrap();
        assert!(!not_found);
    }

    #[test]
    fn judge_rejects_mismatched_pairs() {
        use crate::backend::{default_params, ScriptedBackend};
        let ground = gt("CQ1", "doc1", Label::Right);
        let answer = CqAnswer {
            cq_id: "CQ1".into(),
            doc_id: "doc2".into(),
            raw_text: "x".into(),
            clean_text: "x".into(),
            context_chunks: vec![],
            answered: true,
        };
        assert!(matches!(
            judge_answer(&ScriptedBackend, &default_params("m"), &ground, &answer),
            Err(JudgeError::PairMismatch { .. })
        ));
    }
}

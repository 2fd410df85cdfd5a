//! Cross-run report: a matrix of documents against prompt/answer version
//! combinations, each cell the percentage of knowledge-graph individuals
//! aligned with the answers, or `x` for runs that produced no meaningful
//! graph for that document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kg::KgStatus;
use crate::util::{read_json, write_json};

use super::stages::RunEvaluation;
use super::{RunPaths, StageError};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossRunReport {
    /// Column headers: one per run, labelled "prompt <pv> / answers <av>".
    pub columns: Vec<String>,
    /// Row per document; cells are "NN.NN" or "x".
    pub rows: Vec<(String, Vec<String>)>,
    /// One summary line per run: "D disagreements out of T".
    pub summaries: Vec<String>,
}

/// Builds and writes the cross-run matrix (CSV and markdown) from the
/// evaluation artifacts of the given runs.
pub fn emit_report(
    runs_dir: &Path,
    run_ids: &[String],
    out_dir: &Path,
) -> Result<CrossRunReport, StageError> {
    let mut evaluations: Vec<RunEvaluation> = Vec::new();
    let mut missing: Vec<String> = Vec::new();
    for run_id in run_ids {
        match super::stages::open_run(runs_dir, run_id) {
            Ok((paths, _, _)) => match read_json::<RunEvaluation>(&paths.evaluation_report()) {
                Ok(eval) => evaluations.push(eval),
                Err(_) => missing.push(run_id.clone()),
            },
            Err(_) => missing.push(run_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(StageError::MissingArtifact {
            run_id: missing.join(", "),
            what: "evaluation/report.json (run the evaluate stage first)".into(),
        });
    }
    evaluations.sort_by(|a, b| {
        (&a.prompt_version, &a.answer_version, &a.run_id)
            .cmp(&(&b.prompt_version, &b.answer_version, &b.run_id))
    });

    let columns: Vec<String> = evaluations
        .iter()
        .map(|e| format!("prompt {} / answers {}", e.prompt_version, e.answer_version))
        .collect();

    let mut doc_ids: Vec<String> = evaluations
        .iter()
        .flat_map(|e| e.per_doc.keys().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    doc_ids.sort();

    let mut rows = Vec::with_capacity(doc_ids.len());
    for doc_id in &doc_ids {
        let cells: Vec<String> = evaluations
            .iter()
            .map(|e| match e.per_doc.get(doc_id) {
                Some(alignment) if alignment.status == KgStatus::Ok => alignment
                    .percent
                    .clone()
                    .unwrap_or_else(|| "x".to_string()),
                _ => "x".to_string(),
            })
            .collect();
        rows.push((doc_id.clone(), cells));
    }

    let summaries: Vec<String> = evaluations
        .iter()
        .map(|e| {
            format!(
                "run {} (prompt {}, answers {}): {} disagreements out of {}",
                e.run_id,
                e.prompt_version,
                e.answer_version,
                e.disagreements.disagreement_count,
                e.disagreements.total
            )
        })
        .collect();

    let report = CrossRunReport {
        columns,
        rows,
        summaries,
    };
    std::fs::create_dir_all(out_dir).map_err(|e| StageError::Io {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    let csv_path = out_dir.join("report.csv");
    crate::util::atomic_write(&csv_path, render_csv(&report).as_bytes()).map_err(|e| {
        StageError::Io {
            path: csv_path.display().to_string(),
            message: e.to_string(),
        }
    })?;
    let md_path = out_dir.join("report.md");
    crate::util::atomic_write(&md_path, render_markdown(&report).as_bytes()).map_err(|e| {
        StageError::Io {
            path: md_path.display().to_string(),
            message: e.to_string(),
        }
    })?;
    write_json(&out_dir.join("report.json"), &report).map_err(|e| StageError::Io {
        path: out_dir.join("report.json").display().to_string(),
        message: e.to_string(),
    })?;
    Ok(report)
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn render_csv(report: &CrossRunReport) -> String {
    let mut out = String::from("document");
    for column in &report.columns {
        out.push(',');
        out.push_str(&csv_escape(column));
    }
    out.push('\n');
    for (doc_id, cells) in &report.rows {
        out.push_str(&csv_escape(doc_id));
        for cell in cells {
            out.push(',');
            out.push_str(&csv_escape(cell));
        }
        out.push('\n');
    }
    out
}

pub fn render_markdown(report: &CrossRunReport) -> String {
    let mut out = String::from("| document |");
    for column in &report.columns {
        out.push_str(&format!(" {column} |"));
    }
    out.push('\n');
    out.push_str("| --- |");
    for _ in &report.columns {
        out.push_str(" --- |");
    }
    out.push('\n');
    for (doc_id, cells) in &report.rows {
        out.push_str(&format!("| {doc_id} |"));
        for cell in cells {
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out.push('\n');
    for summary in &report.summaries {
        out.push_str(summary);
        out.push('\n');
    }
    out
}

/// Overall alignment across every ok document of the given evaluations:
/// total matched over total individuals.
pub fn overall_alignment(evaluations: &[RunEvaluation]) -> Option<(u32, u32, String)> {
    let mut matched = 0u32;
    let mut total = 0u32;
    for eval in evaluations {
        for alignment in eval.per_doc.values() {
            if alignment.status == KgStatus::Ok {
                matched += alignment.matched;
                total += alignment.total;
            }
        }
    }
    if total == 0 {
        return None;
    }
    let percent = crate::judge::alignment_percentage(matched, total).ok()?;
    Some((matched, total, percent.to_string()))
}

/// Loads evaluation artifacts for runs, for summary rendering.
pub fn load_evaluations(
    runs_dir: &Path,
    run_ids: &[String],
) -> Result<Vec<RunEvaluation>, StageError> {
    let mut out = Vec::new();
    for run_id in run_ids {
        let (paths, _, _): (RunPaths, _, _) = super::stages::open_run(runs_dir, run_id)?;
        let eval = read_json(&paths.evaluation_report()).map_err(|_| StageError::MissingArtifact {
            run_id: run_id.clone(),
            what: "evaluation/report.json".into(),
        })?;
        out.push(eval);
    }
    Ok(out)
}

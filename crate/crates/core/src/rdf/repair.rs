//! Repair of model-emitted RDF text that fails to parse as-is.
//!
//! Applied in order: strip markdown code fences, drop leading/trailing
//! prose lines, inject missing declarations for the known-namespace table,
//! then drop individual statements that still fail to parse. Every action
//! is recorded; if fewer than one triple survives, repair fails with the
//! no-meaningful-graph error.

use serde::{Deserialize, Serialize};

use super::{known_namespaces, parse_turtle, PrefixMap, RdfError, RdfGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairActionKind {
    StrippedFence,
    StrippedProse,
    InjectedPrefix,
    DroppedStatement,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepairAction {
    pub kind: RepairActionKind,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RepairReport {
    pub actions: Vec<RepairAction>,
    pub recovered_text: String,
}

impl RepairReport {
    fn push(&mut self, kind: RepairActionKind, detail: impl Into<String>) {
        self.actions.push(RepairAction {
            kind,
            detail: detail.into(),
        });
    }
}

/// Repairs raw RDF text into a parseable graph plus a report of the actions
/// taken. Repairing already-valid Turtle returns the identical graph and an
/// empty action list.
pub fn repair_rdf_text(
    raw: &str,
    base_prefixes: &PrefixMap,
) -> Result<(RdfGraph, RepairReport), RdfError> {
    let mut report = RepairReport::default();

    // 1. Strip markdown code fences.
    let mut fence_count = 0;
    let mut lines: Vec<&str> = Vec::new();
    for line in raw.lines() {
        if line.trim_start().starts_with("```") {
            fence_count += 1;
        } else {
            lines.push(line);
        }
    }
    if fence_count > 0 {
        report.push(
            RepairActionKind::StrippedFence,
            format!("removed {fence_count} code fence line(s)"),
        );
    }

    // 2. Drop leading/trailing lines that are not Turtle-shaped.
    let first = lines.iter().position(|l| is_turtle_line(l));
    let last = lines.iter().rposition(|l| is_turtle_line(l));
    let (body, leading, trailing): (Vec<&str>, Vec<&str>, Vec<&str>) = match (first, last) {
        (Some(first), Some(last)) => (
            lines[first..=last].to_vec(),
            lines[..first].to_vec(),
            lines[last + 1..].to_vec(),
        ),
        _ => (Vec::new(), lines.clone(), Vec::new()),
    };
    for (region, dropped) in [("leading", leading), ("trailing", trailing)] {
        let prose: Vec<&str> = dropped.into_iter().filter(|l| !l.trim().is_empty()).collect();
        if !prose.is_empty() {
            report.push(
                RepairActionKind::StrippedProse,
                format!("dropped {} {region} prose line(s): {}", prose.len(), prose.join(" / ")),
            );
        }
    }
    let text = body.join("\n");

    // 3. Inject declarations for used-but-undeclared prefixes that appear in
    //    the known-namespace table and are not covered by base_prefixes.
    let declared = declared_prefixes(&text);
    let used = used_prefixes(&text);
    let known = known_namespaces();
    let mut injected = Vec::new();
    for prefix in used {
        if declared.contains(&prefix) || base_prefixes.contains(&prefix) {
            continue;
        }
        if let Some(namespace) = known.get(&prefix) {
            injected.push(format!("@prefix {prefix}: <{namespace}> ."));
            report.push(RepairActionKind::InjectedPrefix, prefix.clone());
        }
    }
    let text = if injected.is_empty() {
        text
    } else {
        format!("{}\n{}", injected.join("\n"), text)
    };

    // 4. Parse statement blocks one at a time, dropping the ones that fail.
    let blocks = split_statement_blocks(&text);
    let mut prefixes = base_prefixes.clone();
    let mut graph = RdfGraph::new();
    let mut kept_blocks: Vec<&str> = Vec::new();
    let mut dropped = 0usize;
    for block in &blocks {
        match parse_turtle(block, &prefixes) {
            Ok(parsed) => {
                prefixes.merge(&parsed.prefixes);
                for triple in parsed.iter() {
                    graph.insert(triple.clone());
                }
                kept_blocks.push(block);
            }
            Err(err) => {
                dropped += 1;
                let snippet: String = block.trim().chars().take(80).collect();
                report.push(
                    RepairActionKind::DroppedStatement,
                    format!("`{snippet}`: {err}"),
                );
            }
        }
    }
    graph.prefixes = prefixes;

    if graph.is_empty() {
        return Err(RdfError::NoMeaningfulGraph { dropped });
    }

    report.recovered_text = kept_blocks
        .iter()
        .map(|b| b.trim_matches('\n'))
        .collect::<Vec<_>>()
        .join("\n");
    report.recovered_text.push('\n');
    Ok((graph, report))
}

/// A line that looks like the start or continuation of Turtle: a directive,
/// comment, or a line whose first token is an IRI, prefixed name, or quoted
/// literal.
fn is_turtle_line(line: &str) -> bool {
    let trimmed = line.trim_start();
    if trimmed.is_empty() {
        return false;
    }
    if trimmed.starts_with("@prefix")
        || trimmed.starts_with("PREFIX ")
        || trimmed.starts_with('#')
        || trimmed.starts_with('<')
        || trimmed.starts_with('"')
        || trimmed.starts_with('\'')
    {
        return true;
    }
    let first = trimmed.split_whitespace().next().unwrap_or("");
    let first = first.trim_end_matches(['.', ';', ',']);
    if first == "a" {
        return true;
    }
    match first.split_once(':') {
        Some((prefix, local)) => {
            prefix.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                && !local.is_empty()
                && local
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        }
        None => false,
    }
}

fn declared_prefixes(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim_start();
        let rest = if let Some(rest) = trimmed.strip_prefix("@prefix") {
            rest
        } else if let Some(rest) = trimmed.strip_prefix("PREFIX") {
            rest
        } else {
            continue;
        };
        if let Some(colon) = rest.find(':') {
            let prefix = rest[..colon].trim().to_string();
            out.push(prefix);
        }
    }
    out
}

/// Prefixes used in prefixed-name position, in first-use order.
fn used_prefixes(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut in_quote: Option<char> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("@prefix") || trimmed.starts_with("PREFIX") || trimmed.starts_with('#') {
            continue;
        }
        let mut word = String::new();
        for c in line.chars() {
            if let Some(q) = in_quote {
                if c == q {
                    in_quote = None;
                }
                continue;
            }
            match c {
                '"' | '\'' => {
                    in_quote = Some(c);
                    word.clear();
                }
                c if c.is_ascii_alphanumeric() || c == '_' || c == '-' => word.push(c),
                ':' => {
                    if word.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
                        if !out.contains(&word) {
                            out.push(word.clone());
                        }
                    }
                    word.clear();
                }
                _ => word.clear(),
            }
        }
        in_quote = None; // literals do not span lines in this subset
    }
    out
}

/// Splits text into statement blocks terminated by a top-level `.` (one not
/// inside a quoted literal and not part of a decimal number). Directives
/// stay in their own blocks because they are `.`-terminated too.
fn split_statement_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0usize;
    let mut in_quote: Option<u8> = None;
    let mut in_iri = false;
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        match in_quote {
            Some(q) => {
                if c == b'\\' {
                    i += 1; // skip escaped char
                } else if c == q {
                    in_quote = None;
                }
            }
            None if in_iri => {
                if c == b'>' || c == b'\n' {
                    in_iri = false;
                }
            }
            None => match c {
                b'"' | b'\'' => in_quote = Some(c),
                b'<' => in_iri = true,
                b'#' => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                }
                b'.' => {
                    let prev_digit = i > 0 && bytes[i - 1].is_ascii_digit();
                    let next_digit = i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit();
                    if !(prev_digit && next_digit) {
                        let block = &text[start..=i];
                        if !block.trim().is_empty() {
                            blocks.push(block);
                        }
                        start = i + 1;
                    }
                }
                _ => {}
            },
        }
        i += 1;
    }
    if start < text.len() {
        let tail = &text[start..];
        if !tail.trim().is_empty() {
            blocks.push(tail);
        }
    }
    blocks
}

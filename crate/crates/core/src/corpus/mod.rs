//! Corpus ingestion and token-window chunking for retrieval.

mod index;

pub use index::{retrieve, RetrievalHit, RetrievalIndex};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::slugify;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("document {path} is empty")]
    EmptyDocument { path: String },
    #[error("duplicate document id `{doc_id}` (from {path})")]
    DuplicateId { doc_id: String, path: String },
    #[error("chunk overlap ({overlap}) must be smaller than chunk size ({chunk_size})")]
    BadChunkParams { chunk_size: usize, overlap: usize },
    #[error("corpus directory {path} contains no .txt or .md files")]
    EmptyCorpus { path: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    pub source_path: String,
}

/// A token window over one document. `token_start..token_end` are indices
/// into the document's token sequence; `text` is the original byte span
/// from the first to the last token.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub index: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub text: String,
}

/// Byte spans of whitespace-delimited tokens. The tokenizer is pluggable so
/// a model tokenizer can replace word counting without touching chunking.
pub trait Tokenizer: Send + Sync {
    fn spans(&self, text: &str) -> Vec<(usize, usize)>;
}

/// Default tokenizer: Unicode-whitespace-delimited words.
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn spans(&self, text: &str) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut start: Option<usize> = None;
        for (i, c) in text.char_indices() {
            if c.is_whitespace() {
                if let Some(s) = start.take() {
                    spans.push((s, i));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            spans.push((s, text.len()));
        }
        spans
    }
}

/// Token count under the default tokenizer.
pub fn count_tokens(text: &str) -> usize {
    WhitespaceTokenizer.spans(text).len()
}

/// Reads a UTF-8 text or markdown file into a document. The id is the
/// slugified filename stem; the title is the first non-empty line with any
/// leading `#` markers removed.
pub fn ingest_document(path: &Path) -> Result<Document, CorpusError> {
    let body = std::fs::read_to_string(path).map_err(|source| CorpusError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    if body.trim().is_empty() {
        return Err(CorpusError::EmptyDocument {
            path: path.display().to_string(),
        });
    }
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("document");
    let title = body
        .lines()
        .find(|l| !l.trim().is_empty())
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .unwrap_or_else(|| stem.to_string());
    Ok(Document {
        doc_id: slugify(stem),
        title,
        body,
        source_path: path.display().to_string(),
    })
}

/// Ingests every `.txt`/`.md` file in a directory, sorted by filename.
pub fn ingest_corpus(dir: &Path) -> Result<Vec<Document>, CorpusError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Unreadable {
        path: dir.display().to_string(),
        source,
    })?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("txt") | Some("md")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CorpusError::EmptyCorpus {
            path: dir.display().to_string(),
        });
    }
    let mut docs = Vec::with_capacity(paths.len());
    let mut seen = std::collections::BTreeSet::new();
    for path in paths {
        let doc = ingest_document(&path)?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(CorpusError::DuplicateId {
                doc_id: doc.doc_id,
                path: path.display().to_string(),
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Splits a document into token windows of `chunk_size` tokens advancing by
/// `chunk_size - overlap`, so consecutive chunks share exactly `overlap`
/// tokens. The last chunk may be short. Every token lands in at least one
/// chunk.
pub fn chunk_document(
    doc: &Document,
    chunk_size: usize,
    overlap: usize,
) -> Result<Vec<Chunk>, CorpusError> {
    if chunk_size == 0 || overlap >= chunk_size {
        return Err(CorpusError::BadChunkParams { chunk_size, overlap });
    }
    let spans = WhitespaceTokenizer.spans(&doc.body);
    let total = spans.len();
    if total == 0 {
        return Ok(Vec::new());
    }
    let stride = chunk_size - overlap;
    let mut chunks = Vec::new();
    let mut start = 0usize;
    loop {
        let end = (start + chunk_size).min(total);
        chunks.push(Chunk {
            doc_id: doc.doc_id.clone(),
            index: chunks.len(),
            token_start: start,
            token_end: end,
            text: doc.body[spans[start].0..spans[end - 1].1].to_string(),
        });
        if end == total {
            break;
        }
        start += stride;
    }
    Ok(chunks)
}

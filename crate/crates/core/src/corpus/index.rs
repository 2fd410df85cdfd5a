//! Lexical BM25 retrieval over chunks.
//!
//! Deterministic by construction: terms are lowercased alphanumeric words,
//! scores are summed over sorted unique query terms, and ties break by
//! (doc_id, chunk index).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{chunk_document, Chunk, CorpusError, Document};

const K1: f64 = 1.2;
const B: f64 = 0.75;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub chunk: Chunk,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RetrievalIndex {
    chunks: Vec<Chunk>,
    term_freqs: Vec<BTreeMap<String, u32>>,
    doc_freq: BTreeMap<String, u32>,
    avg_len: f64,
}

/// Lowercased alphanumeric terms of a text.
pub fn terms(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(|c| c.to_lowercase())
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

impl RetrievalIndex {
    /// Chunks every document and builds per-term statistics.
    pub fn build(
        docs: &[Document],
        chunk_size: usize,
        overlap: usize,
    ) -> Result<Self, CorpusError> {
        if docs.is_empty() {
            return Err(CorpusError::EmptyCorpus {
                path: "<in-memory corpus>".into(),
            });
        }
        let mut chunks = Vec::new();
        for doc in docs {
            chunks.extend(chunk_document(doc, chunk_size, overlap)?);
        }
        Ok(Self::from_chunks(chunks))
    }

    pub fn from_chunks(chunks: Vec<Chunk>) -> Self {
        let mut term_freqs = Vec::with_capacity(chunks.len());
        let mut doc_freq: BTreeMap<String, u32> = BTreeMap::new();
        let mut total_len = 0usize;
        for chunk in &chunks {
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            let chunk_terms = terms(&chunk.text);
            total_len += chunk_terms.len();
            for term in chunk_terms {
                *tf.entry(term).or_insert(0) += 1;
            }
            for term in tf.keys() {
                *doc_freq.entry(term.clone()).or_insert(0) += 1;
            }
            term_freqs.push(tf);
        }
        let avg_len = if chunks.is_empty() {
            0.0
        } else {
            total_len as f64 / chunks.len() as f64
        };
        RetrievalIndex {
            chunks,
            term_freqs,
            doc_freq,
            avg_len,
        }
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    fn score_chunk(&self, chunk_pos: usize, query_terms: &[String]) -> f64 {
        let tf_map = &self.term_freqs[chunk_pos];
        let len: u32 = tf_map.values().sum();
        let n = self.chunks.len() as f64;
        let mut score = 0.0;
        for term in query_terms {
            let tf = *tf_map.get(term).unwrap_or(&0) as f64;
            if tf == 0.0 {
                continue;
            }
            let df = *self.doc_freq.get(term).unwrap_or(&0) as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let norm = K1 * (1.0 - B + B * len as f64 / self.avg_len.max(1e-9));
            score += idf * tf * (K1 + 1.0) / (tf + norm);
        }
        score
    }
}

/// Top-`k` chunks for a query, optionally restricted to one document.
/// Returns fewer than `k` hits when the candidate set is smaller; scores of
/// zero still count so small corpora always yield context.
pub fn retrieve(
    index: &RetrievalIndex,
    query: &str,
    k: usize,
    doc_filter: Option<&str>,
) -> Vec<RetrievalHit> {
    let mut query_terms = terms(query);
    query_terms.sort();
    query_terms.dedup();

    let mut scored: Vec<(f64, usize)> = index
        .chunks
        .iter()
        .enumerate()
        .filter(|(_, c)| doc_filter.map_or(true, |d| c.doc_id == d))
        .map(|(pos, _)| (index.score_chunk(pos, &query_terms), pos))
        .collect();
    scored.sort_by(|(score_a, pos_a), (score_b, pos_b)| {
        score_b.total_cmp(score_a).then_with(|| {
            let a = &index.chunks[*pos_a];
            let b = &index.chunks[*pos_b];
            (&a.doc_id, a.index).cmp(&(&b.doc_id, b.index))
        })
    });
    scored
        .into_iter()
        .take(k)
        .map(|(score, pos)| RetrievalHit {
            chunk: index.chunks[pos].clone(),
            score,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, body: &str) -> Document {
        Document {
            doc_id: id.into(),
            title: id.into(),
            body: body.into(),
            source_path: "mem".into(),
        }
    }

    fn fixture_docs() -> Vec<Document> {
        vec![
            doc(
                "bats",
                "Echolocation calls were converted to audio spectrograms. \
                 The convolutional network was trained on spectrogram tiles. \
                 Batch size and learning rate were tuned by hand.",
            ),
            doc(
                "plants",
                "Herbarium sheets were scanned into image data. \
                 A residual network classified the scanned sheets. \
                 Training ran for forty epochs on the scanned image data.",
            ),
            doc(
                "rivers",
                "Stream gauge readings form a time series. \
                 The recurrent model ingested the gauge time series directly.",
            ),
        ]
    }

    #[test]
    fn verbatim_chunk_text_ranks_first() {
        let index = RetrievalIndex::build(&fixture_docs(), 12, 3).unwrap();
        let target = index.chunks()[2].clone();
        let hits = retrieve(&index, &target.text, 3, None);
        assert_eq!(hits[0].chunk.doc_id, target.doc_id);
        assert_eq!(hits[0].chunk.index, target.index);
    }

    #[test]
    fn k_larger_than_corpus_returns_everything() {
        let index = RetrievalIndex::build(&fixture_docs(), 50, 10).unwrap();
        let hits = retrieve(&index, "spectrogram", 100, None);
        assert_eq!(hits.len(), index.len());
    }

    #[test]
    fn doc_filter_restricts_results() {
        let index = RetrievalIndex::build(&fixture_docs(), 12, 3).unwrap();
        let hits = retrieve(&index, "time series gauge", 10, Some("rivers"));
        assert!(!hits.is_empty());
        assert!(hits.iter().all(|h| h.chunk.doc_id == "rivers"));
    }

    #[test]
    fn retrieval_is_deterministic_including_ties() {
        let index = RetrievalIndex::build(&fixture_docs(), 12, 3).unwrap();
        let a = retrieve(&index, "no such words anywhere", 5, None);
        let b = retrieve(&index, "no such words anywhere", 5, None);
        let key = |hits: &[RetrievalHit]| {
            hits.iter()
                .map(|h| (h.chunk.doc_id.clone(), h.chunk.index))
                .collect::<Vec<_>>()
        };
        assert_eq!(key(&a), key(&b));
        // All-zero scores fall back to (doc_id, index) order.
        let ordered = key(&a);
        let mut sorted = ordered.clone();
        sorted.sort();
        assert_eq!(ordered, sorted);
    }

    #[test]
    fn reindexing_gives_identical_statistics() {
        let docs = fixture_docs();
        let a = RetrievalIndex::build(&docs, 12, 3).unwrap();
        let b = RetrievalIndex::build(&docs, 12, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn index_size_is_sum_of_per_doc_chunk_counts() {
        let docs = fixture_docs();
        let expected: usize = docs
            .iter()
            .map(|d| chunk_document(d, 12, 3).unwrap().len())
            .sum();
        let index = RetrievalIndex::build(&docs, 12, 3).unwrap();
        assert_eq!(index.len(), expected);
        assert!(expected > 3);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(RetrievalIndex::build(&[], 10, 2).is_err());
    }

    /// Brute-force oracle: recompute df/tf from scratch per query and score
    /// every chunk independently of the index structures.
    fn brute_force_rank(
        docs: &[Document],
        chunk_size: usize,
        overlap: usize,
        query: &str,
        doc_filter: Option<&str>,
    ) -> Vec<(String, usize)> {
        let mut all_chunks = Vec::new();
        for d in docs {
            all_chunks.extend(chunk_document(d, chunk_size, overlap).unwrap());
        }
        let norm = |text: &str| -> Vec<String> {
            text.split_whitespace()
                .map(|w| {
                    w.chars()
                        .filter(|c| c.is_alphanumeric())
                        .flat_map(|c| c.to_lowercase())
                        .collect::<String>()
                })
                .filter(|t| !t.is_empty())
                .collect()
        };
        let chunk_terms: Vec<Vec<String>> = all_chunks.iter().map(|c| norm(&c.text)).collect();
        let n = all_chunks.len() as f64;
        let avg = chunk_terms.iter().map(Vec::len).sum::<usize>() as f64 / n;

        let mut query_terms = norm(query);
        query_terms.sort();
        query_terms.dedup();

        let mut scored: Vec<(f64, String, usize)> = all_chunks
            .iter()
            .zip(&chunk_terms)
            .filter(|(c, _)| doc_filter.map_or(true, |d| c.doc_id == d))
            .map(|(c, ct)| {
                let mut score = 0.0;
                for term in &query_terms {
                    let tf = ct.iter().filter(|t| *t == term).count() as f64;
                    if tf == 0.0 {
                        continue;
                    }
                    let df = chunk_terms
                        .iter()
                        .filter(|other| other.contains(term))
                        .count() as f64;
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    let norm = 1.2 * (1.0 - 0.75 + 0.75 * ct.len() as f64 / avg.max(1e-9));
                    score += idf * tf * (1.2 + 1.0) / (tf + norm);
                }
                (score, c.doc_id.clone(), c.index)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| (&a.1, a.2).cmp(&(&b.1, b.2)))
        });
        scored.into_iter().map(|(_, d, i)| (d, i)).collect()
    }

    #[test]
    fn ranking_matches_brute_force_oracle() {
        let docs = fixture_docs();
        let index = RetrievalIndex::build(&docs, 12, 3).unwrap();
        for query in [
            "audio spectrograms for the convolutional network",
            "scanned image data epochs",
            "time series gauge readings",
            "learning rate batch size",
        ] {
            let expected = brute_force_rank(&docs, 12, 3, query, None);
            let actual: Vec<(String, usize)> = retrieve(&index, query, index.len(), None)
                .into_iter()
                .map(|h| (h.chunk.doc_id, h.chunk.index))
                .collect();
            assert_eq!(actual, expected, "query: {query}");
        }
    }
}

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::SparseVector;
use crate::preprocess::placeholder_token;
use crate::{Error, Result};

pub const DEFAULT_MAX_SIZE: usize = 20_000;
pub const DEFAULT_MIN_COUNT: usize = 5;

/// Terms ordered by decreasing document frequency, then lexically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Self::from_parts(r.terms, r.doc_freq)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            terms: v.terms,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, doc_freq: Vec<usize>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            terms,
            doc_freq,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, id: u32) -> usize {
        self.doc_freq[id as usize]
    }

    /// Returns a copy truncated to the `max_size` most frequent terms.
    pub fn truncated(&self, max_size: usize) -> Self {
        let n = max_size.min(self.len());
        Self::from_parts(self.terms[..n].to_vec(), self.doc_freq[..n].to_vec())
    }
}

/// Builds the vocabulary from tokenised documents.
///
/// Terms in fewer than `min_count` documents are dropped; of the rest the
/// `max_size` with the highest document count are kept (ties by term). The
/// location placeholder never enters the vocabulary.
pub fn build_vocabulary<S: AsRef<[String]>>(
    docs: &[S],
    max_size: usize,
    min_count: usize,
) -> Result<Vocabulary> {
    let placeholder = placeholder_token();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.as_ref().iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            if t != placeholder {
                *df.entry(t).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, usize)> = df.into_iter().filter(|&(_, c)| c >= min_count).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.truncate(max_size);
    if ranked.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    let (terms, doc_freq) = ranked.into_iter().map(|(t, c)| (t.to_string(), c)).unzip();
    Ok(Vocabulary::from_parts(terms, doc_freq))
}

/// Raw-count tf times smoothed idf: `tf · (ln((1 + N) / (1 + df)) + 1)`.
/// Out-of-vocabulary tokens are ignored.
pub fn tfidf(tokens: &[String], vocabulary: &Vocabulary, corpus_size: usize) -> SparseVector {
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for t in tokens {
        if let Some(id) = vocabulary.id(t) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(u32, usize)> = counts.into_iter().collect();
    entries.sort_unstable();
    let n = corpus_size as f64;
    let (indices, values) = entries
        .into_iter()
        .map(|(id, tf)| {
            let df = vocabulary.doc_freq(id) as f64;
            (id, tf as f64 * (((1.0 + n) / (1.0 + df)).ln() + 1.0))
        })
        .unzip();
    SparseVector::from_sorted(indices, values)
}

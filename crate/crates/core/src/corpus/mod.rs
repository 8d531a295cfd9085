//! News corpus loading, sentence segmentation and near-duplicate removal.

mod dedup;
mod load;
mod sentences;

use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use dedup::{dedup, sentence_key, DedupParams, DedupReport, DuplicateGroup};
pub use load::{load_corpus, parse_date, read_corpus, CorpusFormat};
pub use sentences::{sentence_spans, split_sentences};

/// One news item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub title: String,
    pub body: String,
    #[serde(rename = "date")]
    pub published: NaiveDate,
    #[serde(default)]
    pub keywords: Vec<String>,
    /// Byte spans of the body's sentences, derived from the body.
    #[serde(skip)]
    pub sentences: Vec<Range<usize>>,
}

impl Article {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        body: impl Into<String>,
        published: NaiveDate,
        keywords: Vec<String>,
    ) -> Self {
        let body = body.into();
        let sentences = sentence_spans(&body);
        Self {
            id: id.into(),
            title: title.into(),
            body,
            published,
            keywords,
            sentences,
        }
    }

    /// Recomputes sentence spans, e.g. after deserialising.
    pub fn with_sentences(mut self) -> Self {
        self.sentences = sentence_spans(&self.body);
        self
    }

    pub fn sentence_texts(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(|r| &self.body[r.clone()])
    }

    /// Length used to pick the representative of a duplicate group.
    pub fn char_len(&self) -> usize {
        self.body.chars().count()
    }
}

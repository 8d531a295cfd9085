//! Token stream preparation for clustering: location masking, lowercasing,
//! long-token removal, function-word filtering and the mention-count filter.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::geoparse::{normalize_name, ArticleMentions, LocationMention, TextField};
use crate::{Error, Result, LOCATION_PLACEHOLDER};

/// Space-delimited tokens longer than this many characters are dropped.
pub const MAX_TOKEN_CHARS: usize = 25;

/// Default cap on distinct location mentions per article.
pub const MAX_DISTINCT_MENTIONS: usize = 40;

const BUNDLED_LEXICON: &str = include_str!("../data/function_words.csv");

/// Lowercased placeholder as it appears in token streams.
pub fn placeholder_token() -> String {
    LOCATION_PLACEHOLDER.to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosCategory {
    Determiner,
    Conjunction,
    Symbol,
    Pronoun,
    Adverb,
    Adposition,
    Auxiliary,
    Noun,
    ProperNoun,
    Verb,
    Adjective,
    Numeral,
    Particle,
    Interjection,
    Other,
}

impl PosCategory {
    /// Categories removed before building tf-idf vectors.
    pub fn is_removed(self) -> bool {
        matches!(
            self,
            Self::Determiner
                | Self::Conjunction
                | Self::Symbol
                | Self::Pronoun
                | Self::Adverb
                | Self::Adposition
                | Self::Auxiliary
        )
    }
}

impl FromStr for PosCategory {
    type Err = Error;

    /// Accepts lowercase names and Universal Dependencies tags.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "determiner" | "det" => Self::Determiner,
            "conjunction" | "cconj" | "sconj" | "conj" => Self::Conjunction,
            "symbol" | "sym" | "punct" => Self::Symbol,
            "pronoun" | "pron" => Self::Pronoun,
            "adverb" | "adv" => Self::Adverb,
            "adposition" | "adp" => Self::Adposition,
            "auxiliary" | "aux" => Self::Auxiliary,
            "noun" => Self::Noun,
            "propn" | "proper_noun" => Self::ProperNoun,
            "verb" => Self::Verb,
            "adjective" | "adj" => Self::Adjective,
            "numeral" | "num" => Self::Numeral,
            "particle" | "part" => Self::Particle,
            "interjection" | "intj" => Self::Interjection,
            "other" | "x" => Self::Other,
            other => return Err(Error::Invalid(format!("unknown POS category {other:?}"))),
        })
    }
}

/// Word → POS categories.
#[derive(Debug, Clone, Default)]
pub struct FunctionWordLexicon {
    words: HashMap<String, Vec<PosCategory>>,
}

impl FunctionWordLexicon {
    /// The closed-class English lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_csv_str(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }

    /// Parses `word,category` rows; a word may appear on several rows.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut words: HashMap<String, Vec<PosCategory>> = HashMap::new();
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            let (Some(word), Some(cat)) = (row.get(0), row.get(1)) else {
                return Err(Error::Record {
                    index: i + 1,
                    reason: "expected word,category".into(),
                });
            };
            let cat = cat.parse::<PosCategory>().map_err(|e| Error::Record {
                index: i + 1,
                reason: e.to_string(),
            })?;
            let cats = words.entry(word.trim().to_lowercase()).or_default();
            if !cats.contains(&cat) {
                cats.push(cat);
            }
        }
        Ok(Self { words })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn categories(&self, word: &str) -> Option<&[PosCategory]> {
        self.words.get(word).map(Vec::as_slice)
    }

    /// True when every known category of `word` is a removed one.
    pub fn is_function_word(&self, word: &str) -> bool {
        self.categories(word)
            .is_some_and(|c| !c.is_empty() && c.iter().all(|c| c.is_removed()))
    }
}

/// Location surfaces too broad to characterise a place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocklist {
    names: HashSet<String>,
}

impl Default for Blocklist {
    fn default() -> Self {
        Self::new(["Edinburgh"])
    }
}

impl Blocklist {
    pub fn new<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            names: names
                .into_iter()
                .map(|n| normalize_name(n.as_ref()))
                .filter(|n| !n.is_empty())
                .collect(),
        }
    }

    pub fn empty() -> Self {
        Self {
            names: HashSet::new(),
        }
    }

    /// One surface per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_text(&text))
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.names.contains(&normalize_name(surface))
    }
}

/// Lowercases, splits on whitespace, drops tokens longer than
/// [`MAX_TOKEN_CHARS`] and strips surrounding punctuation.
pub fn normalize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter(|t| t.chars().count() <= MAX_TOKEN_CHARS)
        .map(|t| {
            t.trim_matches(|c: char| !(c.is_alphanumeric() || c == '_'))
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Drops tokens whose lexicon categories are all function-word categories.
/// Unknown tokens are kept.
pub fn pos_filter(tokens: Vec<String>, lexicon: &FunctionWordLexicon) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !lexicon.is_function_word(t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSpan {
    pub field: TextField,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedArticle {
    pub article_id: String,
    pub tokens: Vec<String>,
    pub masked_spans: Vec<MaskedSpan>,
    /// Distinct resolved surfaces among the article's mentions.
    pub distinct_mention_count: usize,
}

fn merged_spans(mentions: &[LocationMention], field: TextField) -> Vec<MaskedSpan> {
    let mut spans: Vec<(usize, usize)> = mentions
        .iter()
        .filter(|m| m.field == field)
        .map(|m| (m.start, m.end))
        .collect();
    spans.sort_unstable();
    let mut merged: Vec<MaskedSpan> = Vec::new();
    for (start, end) in spans {
        match merged.last_mut() {
            Some(last) if start < last.end => last.end = last.end.max(end),
            _ => merged.push(MaskedSpan { field, start, end }),
        }
    }
    merged
}

fn mask_text(text: &str, spans: &[MaskedSpan]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for s in spans {
        out.push_str(&text[pos..s.start]);
        out.push(' ');
        out.push_str(LOCATION_PLACEHOLDER);
        out.push(' ');
        pos = s.end;
    }
    out.push_str(&text[pos..]);
    out
}

/// Replaces every mention span (overlaps merged) with the placeholder and
/// normalises the title and body into one token stream.
pub fn mask_locations(article: &Article, mentions: &[LocationMention]) -> TokenizedArticle {
    let title_spans = merged_spans(mentions, TextField::Title);
    let body_spans = merged_spans(mentions, TextField::Body);
    let mut tokens = normalize(&mask_text(&article.title, &title_spans));
    tokens.extend(normalize(&mask_text(&article.body, &body_spans)));
    let mut surfaces: Vec<String> = mentions
        .iter()
        .filter(|m| m.resolved.is_some())
        .map(|m| normalize_name(&m.surface))
        .collect();
    surfaces.sort();
    surfaces.dedup();
    TokenizedArticle {
        article_id: article.id.clone(),
        tokens,
        masked_spans: title_spans.into_iter().chain(body_spans).collect(),
        distinct_mention_count: surfaces.len(),
    }
}

/// Keeps articles with at most `max_distinct_mentions` distinct resolved,
/// non-broad surfaces.
pub fn filter_articles(
    articles: Vec<(Article, ArticleMentions)>,
    blocklist: &Blocklist,
    max_distinct_mentions: usize,
) -> Vec<(Article, ArticleMentions)> {
    articles
        .into_iter()
        .filter(|(_, m)| m.distinct_resolved_surfaces(blocklist).len() <= max_distinct_mentions)
        .collect()
}

/// Masking, normalisation and function-word filtering in one step.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub lexicon: FunctionWordLexicon,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self {
            lexicon: FunctionWordLexicon::bundled(),
        }
    }
}

impl Preprocessor {
    pub fn tokenize(&self, article: &Article, mentions: &[LocationMention]) -> TokenizedArticle {
        let mut t = mask_locations(article, mentions);
        t.tokens = pos_filter(std::mem::take(&mut t.tokens), &self.lexicon);
        t
    }
}

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::Gazetteer;
use crate::corpus::Article;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextField {
    Title,
    Body,
}

/// A place-name mention. `start..end` are byte offsets into the title or
/// body, as given by `field`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationMention {
    pub article_id: String,
    pub field: TextField,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    /// Gazetteer entry id.
    pub resolved: Option<String>,
    /// Data zone id.
    pub zone: Option<String>,
}

impl LocationMention {
    pub fn span(&self) -> Range<usize> {
        self.start..self.end
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// Word tokens of `text` with their byte spans, lowercased.
pub fn word_tokens(text: &str) -> Vec<(Range<usize>, String)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (is_word_char(c), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s..i, text[s..i].to_lowercase()));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s..text.len(), text[s..].to_lowercase()));
    }
    out
}

fn field_mentions(
    article_id: &str,
    field: TextField,
    text: &str,
    gazetteer: &Gazetteer,
) -> Vec<LocationMention> {
    let tokens = word_tokens(text);
    let max_len = gazetteer.max_tokens();
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for i in 0..tokens.len() {
        let mut key = String::new();
        for len in 1..=max_len.min(tokens.len() - i) {
            if len > 1 {
                key.push(' ');
            }
            key.push_str(&tokens[i + len - 1].1);
            if gazetteer.contains_name(&key) {
                candidates.push((i, len));
            }
        }
    }
    // Longer matches first, then earlier starts.
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut taken = vec![false; tokens.len()];
    let mut chosen = Vec::new();
    for (i, len) in candidates {
        if taken[i..i + len].iter().any(|&t| t) {
            continue;
        }
        taken[i..i + len].iter_mut().for_each(|t| *t = true);
        chosen.push((i, len));
    }
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|(i, len)| {
            let start = tokens[i].0.start;
            let end = tokens[i + len - 1].0.end;
            LocationMention {
                article_id: article_id.to_string(),
                field,
                start,
                end,
                surface: text[start..end].to_string(),
                resolved: None,
                zone: None,
            }
        })
        .collect()
}

/// Finds gazetteer names in the title and body by case-insensitive longest
/// match over word tokens. Overlaps go to the longer match, then the earlier
/// start.
pub fn find_mentions(article: &Article, gazetteer: &Gazetteer) -> Vec<LocationMention> {
    if gazetteer.is_empty() {
        return Vec::new();
    }
    let mut out = field_mentions(&article.id, TextField::Title, &article.title, gazetteer);
    out.extend(field_mentions(
        &article.id,
        TextField::Body,
        &article.body,
        gazetteer,
    ));
    out
}

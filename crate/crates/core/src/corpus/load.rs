use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::Deserialize;

use super::Article;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Invalid(format!("unknown corpus format {other:?}"))),
        }
    }
}

impl CorpusFormat {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Jsonl,
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    id: Option<String>,
    title: Option<String>,
    body: Option<String>,
    date: Option<String>,
    #[serde(default)]
    keywords: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct CsvRecord {
    id: Option<String>,
    title: Option<String>,
    body: Option<String>,
    date: Option<String>,
    #[serde(default)]
    keywords: Option<String>,
}

/// Parses an ISO-8601 date, accepting a full timestamp and keeping its date.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.date_naive()))
        .or_else(|| {
            NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
                .ok()
                .map(|d| d.date())
        })
}

fn required(value: Option<String>, field: &str, index: usize) -> Result<String> {
    value.ok_or_else(|| Error::Record {
        index,
        reason: format!("missing field `{field}`"),
    })
}

fn build(
    index: usize,
    id: Option<String>,
    title: Option<String>,
    body: Option<String>,
    date: Option<String>,
    keywords: Vec<String>,
) -> Result<Article> {
    let id = required(id, "id", index)?;
    let title = required(title, "title", index)?;
    let body = required(body, "body", index)?;
    let date = required(date, "date", index)?;
    let published = parse_date(&date).ok_or_else(|| Error::Record {
        index,
        reason: format!("date {date:?} is not ISO-8601"),
    })?;
    Ok(Article::new(id, title, body, published, keywords))
}

/// Parses a corpus held in memory. Record indices in errors are 1-based line
/// numbers (JSONL) or data-row numbers (CSV).
pub fn read_corpus(text: &str, format: CorpusFormat) -> Result<Vec<Article>> {
    let articles = match format {
        CorpusFormat::Jsonl => {
            let mut out = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let index = i + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: JsonRecord = serde_json::from_str(line).map_err(|e| Error::Record {
                    index,
                    reason: e.to_string(),
                })?;
                out.push(build(
                    index,
                    rec.id,
                    rec.title,
                    rec.body,
                    rec.date,
                    rec.keywords.unwrap_or_default(),
                )?);
            }
            out
        }
        CorpusFormat::Csv => {
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            let mut out = Vec::new();
            for (i, rec) in reader.deserialize::<CsvRecord>().enumerate() {
                let index = i + 1;
                let rec = rec.map_err(|e| Error::Record {
                    index,
                    reason: e.to_string(),
                })?;
                let keywords = rec
                    .keywords
                    .map(|k| {
                        k.split(';')
                            .map(str::trim)
                            .filter(|s| !s.is_empty())
                            .map(String::from)
                            .collect()
                    })
                    .unwrap_or_default();
                out.push(build(index, rec.id, rec.title, rec.body, rec.date, keywords)?);
            }
            out
        }
    };
    let mut seen = std::collections::HashSet::new();
    for (i, a) in articles.iter().enumerate() {
        if !seen.insert(a.id.as_str()) {
            return Err(Error::Record {
                index: i + 1,
                reason: format!("duplicate id {:?}", a.id),
            });
        }
    }
    Ok(articles)
}

/// Loads a corpus file, returning articles in file order.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Vec<Article>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_corpus(&text, format)
}

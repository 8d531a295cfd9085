use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::{Error, Result};

/// Annotator relatedness score, 0 to 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Stratum {
    NotRelated = 0,
    Vaguely = 1,
    Somewhat = 2,
    Very = 3,
}

impl Stratum {
    pub const ALL: [Stratum; 4] = [Stratum::NotRelated, Stratum::Vaguely, Stratum::Somewhat, Stratum::Very];
}

impl TryFrom<u8> for Stratum {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Stratum::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| format!("stratum must be 0-3, got {v}"))
    }
}

impl From<Stratum> for u8 {
    fn from(s: Stratum) -> u8 {
        s as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedPair {
    pub article_a: String,
    pub article_b: String,
    pub stratum: Stratum,
}

impl AnnotatedPair {
    pub fn new(a: impl Into<String>, b: impl Into<String>, stratum: Stratum) -> Result<Self> {
        let (article_a, article_b) = (a.into(), b.into());
        if article_a == article_b {
            return Err(Error::Invalid(format!("pair of {article_a} with itself")));
        }
        Ok(Self { article_a, article_b, stratum })
    }

    /// Only "very related" pairs count as belonging together.
    pub fn binary_label(&self) -> bool {
        self.stratum == Stratum::Very
    }
}

pub fn read_annotations<R: Read>(input: R) -> Result<Vec<AnnotatedPair>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.deserialize::<AnnotatedPair>().enumerate() {
        let p = rec.map_err(|e| Error::Record { index: i + 2, reason: e.to_string() })?;
        if p.article_a == p.article_b {
            return Err(Error::Record { index: i + 2, reason: "article paired with itself".into() });
        }
        out.push(p);
    }
    Ok(out)
}

pub fn write_annotations<W: Write>(pairs: &[AnnotatedPair], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in pairs {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("annotations csv", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub article_a: String,
    pub article_b: String,
    pub shared_keywords: usize,
}

fn keyword_set(a: &Article) -> BTreeSet<String> {
    a.keywords.iter().map(|k| k.trim().to_lowercase()).filter(|k| !k.is_empty()).collect()
}

/// Draws `n` distinct unordered pairs without replacement, each with weight
/// `1 + bias * shared_keywords`, using one exponential key per pair.
pub fn sample_annotation_pairs(articles: &[Article], n: usize, bias: f64, seed: u64) -> Result<Vec<CandidatePair>> {
    if !(bias >= 0.0 && bias.is_finite()) {
        return Err(Error::Invalid(format!("bias must be non-negative, got {bias}")));
    }
    let available = articles.len() * articles.len().saturating_sub(1) / 2;
    if n > available {
        return Err(Error::NotEnoughPairs { requested: n, available });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let kw: Vec<BTreeSet<String>> = articles.iter().map(keyword_set).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keyed: Vec<(f64, usize, usize, usize)> = Vec::with_capacity(available);
    for i in 0..articles.len() {
        for j in i + 1..articles.len() {
            let shared = kw[i].intersection(&kw[j]).count();
            let w = 1.0 + bias * shared as f64;
            let u: f64 = rng.random::<f64>();
            // log(u^(1/w)), larger is better; u = 0 maps to -inf.
            keyed.push((u.ln() / w, i, j, shared));
        }
    }
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    Ok(keyed
        .into_iter()
        .take(n)
        .map(|(_, i, j, shared)| CandidatePair {
            article_a: articles[i].id.clone(),
            article_b: articles[j].id.clone(),
            shared_keywords: shared,
        })
        .collect())
}

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::Article;
use crate::par;
use crate::union_find::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DedupParams {
    /// Fraction of the smaller eligible-sentence set that must be shared.
    pub min_shared_fraction: f64,
    /// Sentences with fewer words are ignored.
    pub min_sentence_words: usize,
    /// Sentences found in more articles than this are boilerplate.
    pub boilerplate_doc_count: usize,
}

impl Default for DedupParams {
    fn default() -> Self {
        Self {
            min_shared_fraction: 0.5,
            min_sentence_words: 10,
            boilerplate_doc_count: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub kept_id: String,
    pub dropped_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub retrieved_count: usize,
    pub unique_count: usize,
    pub duplicate_groups: Vec<DuplicateGroup>,
}

/// Identity of a sentence for overlap purposes: lowercased, whitespace
/// collapsed.
pub fn sentence_key(sentence: &str) -> String {
    sentence
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Per-article sorted sets of eligible sentence ids.
fn eligible_sets(articles: &[Article], params: &DedupParams) -> Vec<Vec<u32>> {
    let keyed: Vec<Vec<String>> = par::map_slice(articles, |a| {
        let mut keys: Vec<String> = a
            .sentence_texts()
            .filter(|s| s.split_whitespace().count() >= params.min_sentence_words)
            .map(sentence_key)
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys
    });

    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut doc_freq: Vec<usize> = Vec::new();
    let interned: Vec<Vec<u32>> = keyed
        .iter()
        .map(|keys| {
            keys.iter()
                .map(|k| {
                    let next = ids.len() as u32;
                    let id = *ids.entry(k.as_str()).or_insert(next);
                    if id as usize == doc_freq.len() {
                        doc_freq.push(0);
                    }
                    doc_freq[id as usize] += 1;
                    id
                })
                .collect()
        })
        .collect();

    interned
        .into_iter()
        .map(|set| {
            let mut set: Vec<u32> = set
                .into_iter()
                .filter(|&s| doc_freq[s as usize] <= params.boilerplate_doc_count)
                .collect();
            set.sort_unstable();
            set
        })
        .collect()
}

/// Pairs `(i, j)`, `i < j`, whose eligible sentence sets overlap enough.
fn duplicate_pairs(sets: &[Vec<u32>], min_shared_fraction: f64) -> Vec<(usize, usize)> {
    let mut postings: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, set) in sets.iter().enumerate() {
        for &s in set {
            postings.entry(s).or_default().push(i);
        }
    }
    let per_article: Vec<Vec<(usize, usize)>> = par::map_range(sets.len(), |i| {
        let mut shared: HashMap<usize, usize> = HashMap::new();
        for s in &sets[i] {
            for &j in &postings[s] {
                if j > i {
                    *shared.entry(j).or_insert(0) += 1;
                }
            }
        }
        let mut out: Vec<(usize, usize)> = shared
            .into_iter()
            .filter(|&(j, count)| {
                let smaller = sets[i].len().min(sets[j].len());
                smaller > 0 && count as f64 >= min_shared_fraction * smaller as f64
            })
            .map(|(j, _)| (i, j))
            .collect();
        out.sort_unstable();
        out
    });
    per_article.into_iter().flatten().collect()
}

/// Removes duplicate and near-duplicate articles.
///
/// Two articles are duplicates when the smaller of their eligible sentence
/// sets shares at least `min_shared_fraction` of its sentences with the
/// other. Duplication is closed transitively; each group keeps its longest
/// article (ties: smallest id). Kept articles retain their input order.
pub fn dedup(articles: Vec<Article>, params: &DedupParams) -> (Vec<Article>, DedupReport) {
    let n = articles.len();
    let sets = eligible_sets(&articles, params);
    let mut uf = UnionFind::new(n);
    for (i, j) in duplicate_pairs(&sets, params.min_shared_fraction) {
        uf.union(i, j);
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        groups.entry(uf.find(i)).or_default().push(i);
    }

    let mut keep = vec![false; n];
    let mut duplicate_groups = Vec::new();
    for members in groups.values() {
        let kept = *members
            .iter()
            .max_by(|&&a, &&b| {
                articles[a]
                    .char_len()
                    .cmp(&articles[b].char_len())
                    .then_with(|| articles[b].id.cmp(&articles[a].id))
            })
            .expect("groups are non-empty");
        keep[kept] = true;
        if members.len() > 1 {
            let mut dropped_ids: Vec<String> = members
                .iter()
                .filter(|&&m| m != kept)
                .map(|&m| articles[m].id.clone())
                .collect();
            dropped_ids.sort();
            duplicate_groups.push(DuplicateGroup {
                kept_id: articles[kept].id.clone(),
                dropped_ids,
            });
        }
    }
    duplicate_groups.sort_by(|a, b| a.kept_id.cmp(&b.kept_id));

    let unique: Vec<Article> = articles
        .into_iter()
        .zip(keep)
        .filter_map(|(a, k)| k.then_some(a))
        .collect();
    let report = DedupReport {
        retrieved_count: n,
        unique_count: unique.len(),
        duplicate_groups,
    };
    (unique, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn art(id: &str, body: &str) -> Article {
        Article::new(id, "", body, NaiveDate::from_ymd_opt(2018, 1, 1).unwrap(), vec![])
    }

    fn long(tag: &str) -> String {
        format!("The council said that the {tag} plan would go ahead next spring as agreed.")
    }

    #[test]
    fn single_article() {
        let (out, report) = dedup(vec![art("a", &long("x"))], &DedupParams::default());
        assert_eq!(out.len(), 1);
        assert!(report.duplicate_groups.is_empty());
    }

    #[test]
    fn half_overlap_of_smaller_set_is_duplicate() {
        let a = [long("s1"), long("s2"), long("s3"), long("s4")].join(" ");
        let b = [long("s1"), long("s2"), long("x"), long("y"), "Short one.".into()].join(" ");
        let (out, report) = dedup(vec![art("a", &a), art("b", &b)], &DedupParams::default());
        assert_eq!(out.len(), 1);
        let kept = if a.chars().count() >= b.chars().count() { "a" } else { "b" };
        assert_eq!(out[0].id, kept);
        assert_eq!(report.unique_count, report.retrieved_count - 1);
    }

    #[test]
    fn below_threshold_is_not_duplicate() {
        let a = [long("s1"), long("s2"), long("s3"), long("s4")].join(" ");
        let b = [long("s1"), long("x"), long("y"), long("z")].join(" ");
        let (out, _) = dedup(vec![art("a", &a), art("b", &b)], &DedupParams::default());
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn boilerplate_sentence_is_ignored() {
        let boiler = long("newsletter");
        let articles: Vec<Article> = (0..21)
            .map(|i| art(&format!("a{i:02}"), &format!("{boiler} {}", long(&format!("u{i}")))))
            .collect();
        let (out, _) = dedup(articles.clone(), &DedupParams::default());
        assert_eq!(out.len(), 21);
        // With only 20 copies the sentence is eligible and merges everything.
        let (out, _) = dedup(articles[..20].to_vec(), &DedupParams::default());
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn case_and_whitespace_insensitive_identity() {
        assert_eq!(sentence_key("The  Cat\nSat."), "the cat sat.");
    }

    #[test]
    fn length_tie_keeps_smallest_id() {
        let body = [long("s1"), long("s2")].join(" ");
        let (out, _) = dedup(vec![art("b", &body), art("a", &body)], &DedupParams::default());
        assert_eq!(out[0].id, "a");
    }
}

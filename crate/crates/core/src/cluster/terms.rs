use serde::{Deserialize, Serialize};

use super::ArticleMembership;
use crate::vectorize::{SparseVector, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub term: String,
    pub weight: f64,
}

/// Terms ranked by membership-weighted tf-idf mass within one cluster.
/// `memberships` and `vectors` are aligned by article.
pub fn top_terms(
    cluster: usize,
    memberships: &[ArticleMembership],
    vectors: &[SparseVector],
    vocab: &Vocabulary,
    k: usize,
) -> crate::Result<Vec<TermWeight>> {
    let n_clusters = memberships.first().map_or(0, ArticleMembership::n_clusters);
    if cluster >= n_clusters {
        return Err(crate::Error::UnknownCluster(cluster));
    }
    if memberships.len() != vectors.len() {
        return Err(crate::Error::Invalid(format!(
            "{} memberships for {} vectors",
            memberships.len(),
            vectors.len()
        )));
    }
    let mut score = vec![0.0; vocab.len()];
    for (m, v) in memberships.iter().zip(vectors) {
        let w = m.cluster(cluster);
        if w == 0.0 {
            continue;
        }
        for (i, x) in v.iter() {
            score[i as usize] += w * x;
        }
    }
    let mut ranked: Vec<TermWeight> = score
        .into_iter()
        .enumerate()
        .filter(|(_, s)| *s > 0.0)
        .map(|(i, weight)| TermWeight { term: vocab.term(i as u32).to_string(), weight })
        .collect();
    ranked.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.term.cmp(&b.term)));
    ranked.truncate(k);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::{build_vocabulary, tfidf};

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn tram_cluster() {
        let docs = vec![toks("tram tram line"), toks("tram works"), toks("school pupils"), toks("school board")];
        let vocab = build_vocabulary(&docs, 100, 1).unwrap();
        let vecs: Vec<_> = docs.iter().map(|d| tfidf(d, &vocab, docs.len())).collect();
        let m = |a: f64| ArticleMembership { article_id: String::new(), probs: vec![a, 1.0 - a, 0.0] };
        let mem = vec![m(1.0), m(1.0), m(0.0), m(0.0)];
        let top = top_terms(0, &mem, &vecs, &vocab, 1).unwrap();
        assert_eq!(top[0].term, "tram");
        let all = top_terms(0, &mem, &vecs, &vocab, 100).unwrap();
        assert_eq!(all.len(), 3);
        assert!(matches!(top_terms(2, &mem, &vecs, &vocab, 3), Err(crate::Error::UnknownCluster(2))));
    }
}

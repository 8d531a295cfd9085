//! Vectorise, reduce and cluster in one call, shared by the grid search and
//! the command-line driver.

use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::geoparse::{ArticleMentions, Geoparser};
use crate::preprocess::{filter_articles, Blocklist, Preprocessor};
use crate::cluster::{hdbscan, soft_memberships, ArticleMembership, ClusterModel, HdbscanParams};
use crate::preprocess::TokenizedArticle;
use crate::vectorize::{
    build_vocabulary, tfidf, umap_reduce, Embedding, SparseVector, UmapParams, Vocabulary,
    DEFAULT_MAX_SIZE, DEFAULT_MIN_COUNT,
};
use crate::{par, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringParams {
    pub vocab_max_size: usize,
    pub vocab_min_count: usize,
    pub umap: UmapParams,
    pub hdbscan: HdbscanParams,
}

impl ClusteringParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            vocab_max_size: DEFAULT_MAX_SIZE,
            vocab_min_count: DEFAULT_MIN_COUNT,
            umap: UmapParams::with_seed(seed),
            hdbscan: HdbscanParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusteringRun {
    pub vocabulary: Vocabulary,
    pub vectors: Vec<SparseVector>,
    pub embedding: Embedding,
    pub model: ClusterModel,
    pub memberships: Vec<ArticleMembership>,
}

/// Articles that survived the mention filter, with their mentions and tokens
/// in matching order.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub articles: Vec<Article>,
    pub mentions: Vec<ArticleMentions>,
    pub docs: Vec<TokenizedArticle>,
    /// Ids dropped for mentioning too many places.
    pub filtered_out: Vec<String>,
}

/// Geoparses, drops place-heavy articles and tokenises the rest.
pub fn prepare(
    articles: Vec<Article>,
    geoparser: &Geoparser,
    blocklist: &Blocklist,
    max_distinct_mentions: usize,
    preprocessor: &Preprocessor,
) -> PreparedCorpus {
    let mentions = geoparser.process_all(&articles);
    let all_ids: Vec<String> = articles.iter().map(|a| a.id.clone()).collect();
    let kept = filter_articles(articles.into_iter().zip(mentions).collect(), blocklist, max_distinct_mentions);
    let (articles, mentions): (Vec<_>, Vec<_>) = kept.into_iter().unzip();
    let kept_ids: std::collections::HashSet<&str> = articles.iter().map(|a| a.id.as_str()).collect();
    let filtered_out = all_ids.iter().filter(|id| !kept_ids.contains(id.as_str())).cloned().collect();
    let pairs: Vec<(&Article, &ArticleMentions)> = articles.iter().zip(&mentions).collect();
    let docs = par::map_slice(&pairs, |(a, m)| preprocessor.tokenize(a, &m.mentions));
    PreparedCorpus { articles, mentions, docs, filtered_out }
}

pub fn vectorize(docs: &[TokenizedArticle], max_size: usize, min_count: usize) -> Result<(Vocabulary, Vec<SparseVector>)> {
    let tokens: Vec<&[String]> = docs.iter().map(|d| d.tokens.as_slice()).collect();
    let vocabulary = build_vocabulary(&tokens, max_size, min_count)?;
    let vectors = par::map_slice(docs, |d| tfidf(&d.tokens, &vocabulary, docs.len()));
    Ok((vocabulary, vectors))
}

pub fn run_clustering(docs: &[TokenizedArticle], params: &ClusteringParams) -> Result<ClusteringRun> {
    let (vocabulary, vectors) = vectorize(docs, params.vocab_max_size, params.vocab_min_count)?;
    let ids = docs.iter().map(|d| d.article_id.clone()).collect();
    let embedding = umap_reduce(ids, &vectors, &params.umap)?;
    let model = hdbscan(embedding.coordinates.view(), &params.hdbscan)?;
    let memberships = soft_memberships(&model, &embedding)?;
    Ok(ClusteringRun { vocabulary, vectors, embedding, model, memberships })
}

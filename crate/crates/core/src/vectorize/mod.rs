//! tf-idf representation, the Hellinger metric and UMAP dimensionality
//! reduction.

mod hellinger;
mod persist;
mod sparse;
mod umap;
mod vocab;

use ndarray::Array2;

pub use hellinger::{hellinger, hellinger_dense, HellingerRoots};
pub use persist::{
    read_embedding_bin, read_embedding_csv, write_embedding_bin, write_embedding_csv,
    EmbeddingHeader,
};
pub use sparse::SparseVector;
pub use umap::{
    exact_knn, fit_curve, fuzzy_simplicial_set, smooth_knn_dist, umap_from_knn, umap_reduce,
    FuzzyGraph, KnnGraph, UmapParams,
};
pub use vocab::{build_vocabulary, tfidf, Vocabulary, DEFAULT_MAX_SIZE, DEFAULT_MIN_COUNT};

/// Low-dimensional coordinates, one row per article.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub article_ids: Vec<String>,
    pub coordinates: Array2<f64>,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.article_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.article_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coordinates.ncols()
    }
}

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{macro_f1, pair_confusion, AnnotatedPair, OutlierPolicy};
use crate::pipeline::{run_clustering, ClusteringParams};
use crate::preprocess::TokenizedArticle;
use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub vocab_sizes: Vec<usize>,
    pub umap_dims: Vec<usize>,
    pub umap_neighbors: Vec<usize>,
}

/// One grid combination, in the column order of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub macro_f1: Option<f64>,
    pub n_clusters: Option<usize>,
    pub d: usize,
    pub n_neighbors: usize,
    pub vocab: usize,
    pub error: Option<String>,
}

impl GridRow {
    fn key(&self) -> (usize, usize, usize) {
        (self.d, self.n_neighbors, self.vocab)
    }
}

/// Runs every combination with the same seed and base parameters. Rows are
/// sorted by Macro-F1 (failures last), then by `(d, n_neighbors, vocab)`.
pub fn grid_search(
    docs: &[TokenizedArticle],
    pairs: &[AnnotatedPair],
    spec: &GridSpec,
    base: &ClusteringParams,
    policy: OutlierPolicy,
) -> Vec<GridRow> {
    let mut combos = Vec::new();
    for &vocab in &spec.vocab_sizes {
        for &d in &spec.umap_dims {
            for &k in &spec.umap_neighbors {
                combos.push((d, k, vocab));
            }
        }
    }
    let mut rows = par::map_slice(&combos, |&(d, n_neighbors, vocab)| {
        let mut params = base.clone();
        params.vocab_max_size = vocab;
        params.umap.n_components = d;
        params.umap.n_neighbors = n_neighbors;
        let outcome = run_clustering(docs, &params).and_then(|run| {
            let labels: HashMap<String, i32> = run
                .embedding
                .article_ids
                .iter()
                .cloned()
                .zip(run.model.labels.iter().copied())
                .collect();
            let score = macro_f1(&pair_confusion(&labels, pairs, policy)?)?;
            Ok::<_, Error>((score.score, run.model.n_clusters()))
        });
        match outcome {
            Ok((f1, k)) => GridRow { macro_f1: Some(f1), n_clusters: Some(k), d, n_neighbors, vocab, error: None },
            Err(e) => {
                log::warn!("grid row d={d} k={n_neighbors} vocab={vocab} failed: {e}");
                GridRow { macro_f1: None, n_clusters: None, d, n_neighbors, vocab, error: Some(e.to_string()) }
            }
        }
    });
    rows.sort_by(|a, b| {
        let fa = a.macro_f1.unwrap_or(f64::NEG_INFINITY);
        let fb = b.macro_f1.unwrap_or(f64::NEG_INFINITY);
        fb.total_cmp(&fa).then(a.key().cmp(&b.key()))
    });
    rows
}

/// Table layout: Macro-F1 as a percentage with two decimals, then
/// `n_clusters, d, n_neighbors, vocab`, then any error.
pub fn write_grid_csv<W: Write>(rows: &[GridRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["macro_f1", "n_clusters", "d", "n_neighbors", "vocab", "error"])?;
    for r in rows {
        w.write_record([
            r.macro_f1.map(|f| format!("{:.2}", f * 100.0)).unwrap_or_default(),
            r.n_clusters.map(|k| k.to_string()).unwrap_or_default(),
            r.d.to_string(),
            r.n_neighbors.to_string(),
            r.vocab.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("grid csv", e))?;
    Ok(())
}

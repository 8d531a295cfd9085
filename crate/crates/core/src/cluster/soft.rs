use serde::{Deserialize, Serialize};

use super::{euclidean, ClusterModel, TreeIndex, NOISE};
use crate::par;
use crate::vectorize::Embedding;

/// Probability of each flat cluster followed by a final noise slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleMembership {
    pub article_id: String,
    pub probs: Vec<f64>,
}

impl ArticleMembership {
    pub fn n_clusters(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn noise(&self) -> f64 {
        self.probs[self.probs.len() - 1]
    }

    pub fn cluster(&self, k: usize) -> f64 {
        self.probs[k]
    }

    /// Index of the largest entry; `n_clusters()` means noise.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Points with the highest lambda in each leaf cluster beneath `node`.
fn exemplars(idx: &TreeIndex, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for leaf in idx.subtree(node) {
        if !idx.cluster_children[&leaf].is_empty() {
            continue;
        }
        let members: Vec<usize> = (0..idx.n_points)
            .filter(|&p| idx.point_parent[p] == leaf)
            .collect();
        let max = members
            .iter()
            .map(|&p| idx.point_lambda[p])
            .fold(f64::NEG_INFINITY, f64::max);
        out.extend(members.into_iter().filter(|&p| idx.point_lambda[p] == max));
    }
    out
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
    v
}

/// Soft cluster membership for every embedded article.
///
/// The cluster part blends a distance term (softmax of negative distance to
/// each cluster's exemplars) with a persistence term (how long the point stays
/// in the same tree branch as the cluster). Noise takes the shortfall of the
/// strongest cluster, then the vector is renormalised. A hard-labelled point
/// always has its largest entry on its own cluster.
pub fn soft_memberships(
    model: &ClusterModel,
    embedding: &Embedding,
) -> crate::Result<Vec<ArticleMembership>> {
    if embedding.len() != model.n_points {
        return Err(crate::Error::Invalid(format!(
            "embedding has {} rows but the model has {} points",
            embedding.len(),
            model.n_points
        )));
    }
    let k = model.n_clusters();
    if k == 0 {
        return Ok(embedding
            .article_ids
            .iter()
            .map(|id| ArticleMembership { article_id: id.clone(), probs: vec![1.0] })
            .collect());
    }
    let idx = model.tree_index();
    let rows: Vec<Vec<f64>> = embedding.coordinates.rows().into_iter().map(|r| r.to_vec()).collect();
    let ex: Vec<Vec<usize>> = model.selected.iter().map(|&c| exemplars(&idx, c)).collect();

    let probs = par::map_range(model.n_points, |p| {
        let dist: Vec<f64> = ex
            .iter()
            .map(|e| {
                e.iter()
                    .map(|&q| euclidean(&rows[p], &rows[q]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let dmin = dist.iter().copied().fold(f64::INFINITY, f64::min);
        let s_dist = normalized(dist.iter().map(|d| (dmin - d).exp()).collect());

        let leaf = idx.point_parent[p];
        let lp = idx.point_lambda[p];
        let pers: Vec<f64> = model
            .selected
            .iter()
            .map(|&c| {
                if idx.is_ancestor_or_self(c, leaf) || lp <= 0.0 {
                    return 1.0;
                }
                let m = idx.lca(leaf, c);
                let join = idx.death(m).unwrap_or(lp).min(lp);
                join / lp
            })
            .collect();
        let s_pers = normalized(pers);

        let mut v: Vec<f64> = s_dist.iter().zip(&s_pers).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
        let top = v.iter().copied().fold(0.0, f64::max);
        v.push(1.0 - top);
        let mut v = normalized(v);

        let label = model.labels[p];
        if label != NOISE {
            let l = label as usize;
            let a = argmax(&v);
            if v[a] > v[l] {
                v.swap(a, l);
            }
        }
        v
    });

    Ok(embedding
        .article_ids
        .iter()
        .zip(probs)
        .map(|(id, probs)| ArticleMembership { article_id: id.clone(), probs })
        .collect())
}

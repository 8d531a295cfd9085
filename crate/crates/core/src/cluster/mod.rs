//! Density-based clustering of article embeddings.

mod condensed;
mod hierarchy;
mod linkage;
mod soft;
mod terms;

use std::collections::BTreeMap;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use condensed::{condense_tree, select_eom, stabilities, CondensedEdge};
pub use hierarchy::{ClusterHierarchy, HierarchyNode};
pub use linkage::{
    core_distances, euclidean, mst_mutual_reachability, mutual_reachability, single_linkage,
    LinkageStep,
};
pub use soft::{soft_memberships, ArticleMembership};
pub use terms::{top_terms, TermWeight};

pub(crate) use condensed::TreeIndex;

pub const NOISE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub allow_single_cluster: bool,
}

impl Default for HdbscanParams {
    fn default() -> Self {
        Self {
            min_cluster_size: 250,
            min_samples: 5,
            allow_single_cluster: false,
        }
    }
}

/// Fitted hierarchy plus flat labels. Cluster ids index `selected`, which is
/// ordered by decreasing stability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub params: HdbscanParams,
    pub n_points: usize,
    pub labels: Vec<i32>,
    pub linkage: Vec<LinkageStep>,
    pub condensed_tree: Vec<CondensedEdge>,
    pub stability: BTreeMap<usize, f64>,
    /// Condensed-tree node of each flat cluster.
    pub selected: Vec<usize>,
}

impl ClusterModel {
    pub fn n_clusters(&self) -> usize {
        self.selected.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    /// Flat cluster id of a condensed-tree node, if it was selected.
    pub fn cluster_of_node(&self, node: usize) -> Option<usize> {
        self.selected.iter().position(|&s| s == node)
    }

    pub(crate) fn tree_index(&self) -> TreeIndex {
        TreeIndex::new(&self.condensed_tree, self.n_points)
    }

    fn all_noise(params: HdbscanParams, n: usize) -> Self {
        Self {
            params,
            n_points: n,
            labels: vec![NOISE; n],
            linkage: Vec::new(),
            condensed_tree: Vec::new(),
            stability: BTreeMap::new(),
            selected: Vec::new(),
        }
    }
}

/// Runs HDBSCAN on the rows of `points`.
pub fn hdbscan(points: ArrayView2<f64>, params: &HdbscanParams) -> crate::Result<ClusterModel> {
    let n = points.nrows();
    if params.min_cluster_size < 2 {
        return Err(crate::Error::Invalid("min_cluster_size must be at least 2".into()));
    }
    if params.min_samples == 0 {
        return Err(crate::Error::Invalid("min_samples must be positive".into()));
    }
    if let Some((i, j)) = points
        .indexed_iter()
        .find_map(|(ij, v)| (!v.is_finite()).then_some(ij))
    {
        return Err(crate::Error::NonFiniteDistance(i, j));
    }
    if n <= params.min_cluster_size {
        log::warn!(
            "{n} points is not more than min_cluster_size {}; every point is noise",
            params.min_cluster_size
        );
        return Ok(ClusterModel::all_noise(*params, n));
    }

    let core = core_distances(points, params.min_samples);
    let mst = mst_mutual_reachability(points, &core);
    let linkage = single_linkage(n, &mst);
    let tree = condense_tree(&linkage, n, params.min_cluster_size);
    let stability = stabilities(&tree, n);
    let mut selected = select_eom(&tree, n, &stability, params.allow_single_cluster);
    selected.sort_by(|a, b| stability[b].total_cmp(&stability[a]).then(a.cmp(b)));

    let idx = TreeIndex::new(&tree, n);
    let labels = (0..n)
        .map(|p| {
            let mut c = idx.point_parent[p];
            loop {
                if let Some(k) = selected.iter().position(|&s| s == c) {
                    return k as i32;
                }
                if c == idx.root {
                    return NOISE;
                }
                c = idx.cluster_parent[&c];
            }
        })
        .collect();

    Ok(ClusterModel {
        params: *params,
        n_points: n,
        labels,
        linkage,
        condensed_tree: tree,
        stability,
        selected,
    })
}

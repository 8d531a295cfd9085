//! Condensed cluster tree, stability and excess-of-mass selection.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::linkage::LinkageStep;

/// Edge of the condensed tree. Points are `0..n`, clusters `n..`; the root
/// cluster is `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedEdge {
    pub parent: usize,
    pub child: usize,
    pub lambda: f64,
    pub child_size: usize,
}

/// Smallest distance used when converting to density `1 / d`.
const MIN_DISTANCE: f64 = 1e-200;

fn lambda_of(distance: f64) -> f64 {
    1.0 / distance.max(MIN_DISTANCE)
}

fn leaves(linkage: &[LinkageStep], n: usize, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let s = linkage[x - n];
            stack.push(s.right);
            stack.push(s.left);
        }
    }
    out
}

/// Walks the dendrogram top-down. A split where both sides have at least
/// `min_cluster_size` points creates two child clusters; otherwise the small
/// side's points fall out of the parent, which continues as the large side.
pub fn condense_tree(linkage: &[LinkageStep], n: usize, min_cluster_size: usize) -> Vec<CondensedEdge> {
    if n < 2 || linkage.len() != n - 1 {
        return Vec::new();
    }
    let size = |x: usize| if x < n { 1 } else { linkage[x - n].size };
    let root = 2 * n - 2;
    let mut relabel = vec![0usize; 2 * n - 1];
    relabel[root] = n;
    let mut next_label = n + 1;
    let mut ignore = vec![false; 2 * n - 1];
    let mut out = Vec::new();

    let mut queue = VecDeque::from([root]);
    while let Some(node) = queue.pop_front() {
        if node >= n {
            let s = linkage[node - n];
            queue.push_back(s.left);
            queue.push_back(s.right);
        }
        if node < n || ignore[node] {
            continue;
        }
        let s = linkage[node - n];
        let lambda = lambda_of(s.distance);
        let parent = relabel[node];
        let (l, r) = (s.left, s.right);
        let (ls, rs) = (size(l), size(r));
        let fall_out = |side: usize, out: &mut Vec<CondensedEdge>, ignore: &mut Vec<bool>| {
            for p in leaves(linkage, n, side) {
                out.push(CondensedEdge { parent, child: p, lambda, child_size: 1 });
            }
            let mut stack = vec![side];
            while let Some(x) = stack.pop() {
                ignore[x] = true;
                if x >= n {
                    stack.push(linkage[x - n].left);
                    stack.push(linkage[x - n].right);
                }
            }
        };
        match (ls >= min_cluster_size, rs >= min_cluster_size) {
            (true, true) => {
                for (side, sz) in [(l, ls), (r, rs)] {
                    relabel[side] = next_label;
                    next_label += 1;
                    out.push(CondensedEdge { parent, child: relabel[side], lambda, child_size: sz });
                }
            }
            (false, false) => {
                fall_out(l, &mut out, &mut ignore);
                fall_out(r, &mut out, &mut ignore);
            }
            (false, true) => {
                relabel[r] = parent;
                fall_out(l, &mut out, &mut ignore);
            }
            (true, false) => {
                relabel[l] = parent;
                fall_out(r, &mut out, &mut ignore);
            }
        }
    }
    out
}

/// Navigation over the cluster nodes of a condensed tree.
#[derive(Debug, Clone)]
pub(crate) struct TreeIndex {
    pub n_points: usize,
    pub root: usize,
    /// Parent cluster of every cluster (root maps to itself).
    pub cluster_parent: BTreeMap<usize, usize>,
    pub cluster_children: BTreeMap<usize, Vec<usize>>,
    pub birth: BTreeMap<usize, f64>,
    pub cluster_size: BTreeMap<usize, usize>,
    /// Cluster each point falls out of and the lambda at which it does.
    pub point_parent: Vec<usize>,
    pub point_lambda: Vec<f64>,
}

impl TreeIndex {
    pub fn new(tree: &[CondensedEdge], n_points: usize) -> Self {
        let root = n_points;
        let mut cluster_parent = BTreeMap::from([(root, root)]);
        let mut cluster_children: BTreeMap<usize, Vec<usize>> = BTreeMap::from([(root, vec![])]);
        let mut birth = BTreeMap::from([(root, 0.0)]);
        let mut cluster_size = BTreeMap::from([(root, n_points)]);
        let mut point_parent = vec![root; n_points];
        let mut point_lambda = vec![0.0; n_points];
        for e in tree {
            if e.child < n_points {
                point_parent[e.child] = e.parent;
                point_lambda[e.child] = e.lambda;
            } else {
                cluster_parent.insert(e.child, e.parent);
                cluster_children.entry(e.parent).or_default().push(e.child);
                cluster_children.entry(e.child).or_default();
                birth.insert(e.child, e.lambda);
                cluster_size.insert(e.child, e.child_size);
            }
        }
        Self {
            n_points,
            root,
            cluster_parent,
            cluster_children,
            birth,
            cluster_size,
            point_parent,
            point_lambda,
        }
    }

    pub fn clusters(&self) -> impl DoubleEndedIterator<Item = usize> + '_ {
        self.cluster_parent.keys().copied()
    }

    pub fn depth(&self, mut c: usize) -> usize {
        let mut d = 0;
        while c != self.root {
            c = self.cluster_parent[&c];
            d += 1;
        }
        d
    }

    pub fn is_ancestor_or_self(&self, ancestor: usize, mut c: usize) -> bool {
        loop {
            if c == ancestor {
                return true;
            }
            if c == self.root {
                return false;
            }
            c = self.cluster_parent[&c];
        }
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let (mut da, mut db) = (self.depth(a), self.depth(b));
        while da > db {
            a = self.cluster_parent[&a];
            da -= 1;
        }
        while db > da {
            b = self.cluster_parent[&b];
            db -= 1;
        }
        while a != b {
            a = self.cluster_parent[&a];
            b = self.cluster_parent[&b];
        }
        a
    }

    /// Lambda at which a cluster splits into child clusters, if it does.
    pub fn death(&self, c: usize) -> Option<f64> {
        self.cluster_children[&c].first().map(|ch| self.birth[ch])
    }

    /// Clusters in the subtree of `c`, including `c`.
    pub fn subtree(&self, c: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![c];
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(self.cluster_children[&x].iter().rev().copied());
        }
        out
    }
}

/// `Σ (λ_p − λ_birth) · size` over everything leaving each cluster.
pub fn stabilities(tree: &[CondensedEdge], n_points: usize) -> BTreeMap<usize, f64> {
    let idx = TreeIndex::new(tree, n_points);
    let mut out: BTreeMap<usize, f64> = idx.clusters().map(|c| (c, 0.0)).collect();
    for e in tree {
        *out.get_mut(&e.parent).expect("parent is a cluster") +=
            (e.lambda - idx.birth[&e.parent]) * e.child_size as f64;
    }
    out
}

/// Excess-of-mass selection. The root is eligible only with
/// `allow_single_cluster`.
pub fn select_eom(
    tree: &[CondensedEdge],
    n_points: usize,
    stability: &BTreeMap<usize, f64>,
    allow_single_cluster: bool,
) -> Vec<usize> {
    let idx = TreeIndex::new(tree, n_points);
    let mut propagated = stability.clone();
    let mut is_selected: BTreeMap<usize, bool> = idx.clusters().map(|c| (c, true)).collect();
    let nodes: Vec<usize> = idx
        .clusters()
        .rev()
        .filter(|&c| allow_single_cluster || c != idx.root)
        .collect();
    for c in nodes {
        let children = &idx.cluster_children[&c];
        let subtree: f64 = children.iter().map(|ch| propagated[ch]).sum();
        if !children.is_empty() && subtree > propagated[&c] {
            is_selected.insert(c, false);
            propagated.insert(c, subtree);
        } else {
            for d in idx.subtree(c).into_iter().skip(1) {
                is_selected.insert(d, false);
            }
        }
    }
    if !allow_single_cluster {
        is_selected.insert(idx.root, false);
    }
    is_selected
        .into_iter()
        .filter_map(|(c, s)| s.then_some(c))
        .collect()
}

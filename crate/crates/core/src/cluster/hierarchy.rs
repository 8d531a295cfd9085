use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ClusterModel;

/// A candidate cluster of the condensed tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyNode {
    pub node: usize,
    pub parent: Option<usize>,
    /// Flat cluster id when the node was selected.
    pub cluster: Option<usize>,
    pub size: usize,
    pub birth_lambda: f64,
    pub stability: f64,
}

/// Cluster-only skeleton of the condensed tree, root first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterHierarchy {
    pub nodes: Vec<HierarchyNode>,
}

const SELECTED_COLOUR: &str = "#2ca02c";
const CANDIDATE_COLOUR: &str = "#d62728";

impl ClusterHierarchy {
    pub fn from_model(model: &ClusterModel) -> Self {
        if model.condensed_tree.is_empty() {
            return Self { nodes: Vec::new() };
        }
        let idx = model.tree_index();
        let nodes = idx
            .clusters()
            .map(|c| HierarchyNode {
                node: c,
                parent: (c != idx.root).then(|| idx.cluster_parent[&c]),
                cluster: model.cluster_of_node(c),
                size: idx.cluster_size[&c],
                birth_lambda: idx.birth[&c],
                stability: model.stability.get(&c).copied().unwrap_or(0.0),
            })
            .collect();
        Self { nodes }
    }

    pub fn get(&self, node: usize) -> Option<&HierarchyNode> {
        self.nodes.iter().find(|n| n.node == node)
    }

    pub fn children(&self, node: usize) -> Vec<&HierarchyNode> {
        self.nodes.iter().filter(|n| n.parent == Some(node)).collect()
    }

    pub fn leaves(&self) -> Vec<&HierarchyNode> {
        self.nodes
            .iter()
            .filter(|n| self.children(n.node).is_empty())
            .collect()
    }

    fn root(&self) -> Option<&HierarchyNode> {
        self.nodes.iter().find(|n| n.parent.is_none())
    }

    fn selected_under(&self, node: usize, out: &mut Vec<usize>) {
        if let Some(c) = self.get(node).and_then(|n| n.cluster) {
            out.push(c);
        }
        for ch in self.children(node) {
            self.selected_under(ch.node, out);
        }
    }

    /// Flat clusters grouped by the top-level branch they sit in. A selected
    /// root yields a single group.
    pub fn branches(&self) -> Vec<Vec<usize>> {
        let Some(root) = self.root() else {
            return Vec::new();
        };
        if let Some(c) = root.cluster {
            return vec![vec![c]];
        }
        self.children(root.node)
            .into_iter()
            .map(|ch| {
                let mut v = Vec::new();
                self.selected_under(ch.node, &mut v);
                v.sort_unstable();
                v
            })
            .filter(|v| !v.is_empty())
            .collect()
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph clusters {\n  node [shape=circle, style=filled];\n");
        for n in &self.nodes {
            let (label, colour) = match n.cluster {
                Some(c) => (c.to_string(), SELECTED_COLOUR),
                None => (format!("n{}", n.node), CANDIDATE_COLOUR),
            };
            let _ = writeln!(
                s,
                "  n{} [label=\"{}\", fillcolor=\"{}\", tooltip=\"size={} birth={} stability={}\"];",
                n.node, label, colour, n.size, n.birth_lambda, n.stability
            );
        }
        for n in &self.nodes {
            if let Some(p) = n.parent {
                let _ = writeln!(s, "  n{p} -> n{};", n.node);
            }
        }
        s.push_str("}\n");
        s
    }

    /// Reads back the output of [`to_dot`](Self::to_dot).
    pub fn from_dot(text: &str) -> crate::Result<Self> {
        let bad = |line: &str| crate::Error::Invalid(format!("unrecognised DOT line: {line}"));
        let mut nodes = Vec::new();
        let mut parents = BTreeMap::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with("digraph") || line.starts_with("node ") || line == "}" {
                continue;
            }
            let line = line.strip_suffix(';').ok_or_else(|| bad(line))?;
            if let Some((from, to)) = line.split_once(" -> ") {
                parents.insert(node_id(to).ok_or_else(|| bad(line))?, node_id(from).ok_or_else(|| bad(line))?);
                continue;
            }
            let (name, rest) = line.split_once(' ').ok_or_else(|| bad(line))?;
            let node = node_id(name).ok_or_else(|| bad(line))?;
            let attrs = parse_attrs(rest).ok_or_else(|| bad(line))?;
            let cluster = match attrs.get("fillcolor").map(String::as_str) {
                Some(SELECTED_COLOUR) => Some(attrs.get("label").and_then(|l| l.parse().ok()).ok_or_else(|| bad(line))?),
                _ => None,
            };
            let tip: BTreeMap<&str, &str> = attrs
                .get("tooltip")
                .map(|t| t.split(' ').filter_map(|kv| kv.split_once('=')).collect())
                .unwrap_or_default();
            let num = |k: &str| tip.get(k).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| bad(line));
            nodes.push(HierarchyNode {
                node,
                parent: None,
                cluster,
                size: num("size")? as usize,
                birth_lambda: num("birth")?,
                stability: num("stability")?,
            });
        }
        for n in &mut nodes {
            n.parent = parents.get(&n.node).copied();
        }
        Ok(Self { nodes })
    }
}

fn node_id(name: &str) -> Option<usize> {
    name.trim().strip_prefix('n')?.parse().ok()
}

fn parse_attrs(s: &str) -> Option<BTreeMap<String, String>> {
    let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    let mut out = BTreeMap::new();
    let mut rest = inner;
    while !rest.trim().is_empty() {
        let (key, after) = rest.split_once("=\"")?;
        let (value, tail) = after.split_once('"')?;
        out.insert(key.trim().trim_start_matches(',').trim().to_string(), value.to_string());
        rest = tail;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{hdbscan, HdbscanParams};

    fn model() -> ClusterModel {
        let pts = crate::cluster::tests::blobs(40, &[(0.0, 0.0), (30.0, 0.0), (0.0, 30.0)], 2);
        hdbscan(pts.view(), &HdbscanParams { min_cluster_size: 8, ..Default::default() }).unwrap()
    }

    #[test]
    fn dot_round_trip() {
        let h = ClusterHierarchy::from_model(&model());
        let back = ClusterHierarchy::from_dot(&h.to_dot()).unwrap();
        assert_eq!(back, h);
        let selected = h.nodes.iter().filter(|n| n.cluster.is_some()).count();
        assert_eq!(selected, 3);
    }

    #[test]
    fn branches_cover_every_cluster() {
        let m = model();
        let h = ClusterHierarchy::from_model(&m);
        let mut all: Vec<usize> = h.branches().concat();
        all.sort_unstable();
        assert_eq!(all, (0..m.n_clusters()).collect::<Vec<_>>());
    }

    #[test]
    fn single_cluster_is_one_leaf() {
        let pts = crate::cluster::tests::blobs(100, &[(0.0, 0.0)], 5);
        let p = HdbscanParams { min_cluster_size: 60, allow_single_cluster: true, ..Default::default() };
        let h = ClusterHierarchy::from_model(&hdbscan(pts.view(), &p).unwrap());
        assert_eq!(h.nodes.len(), 1);
        assert_eq!(h.leaves()[0].cluster, Some(0));
        assert_eq!(h.branches(), vec![vec![0]]);
    }
}

use ndarray::ArrayView2;

use crate::par;
use crate::union_find::UnionFind;

/// One merge of a single-linkage dendrogram. Leaves are `0..n`; the merge at
/// row `r` creates node `n + r`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinkageStep {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn row(points: &ArrayView2<f64>, i: usize) -> Vec<f64> {
    points.row(i).to_vec()
}

/// Distance to the `min_samples`-th nearest point, counting the point itself.
pub fn core_distances(points: ArrayView2<f64>, min_samples: usize) -> Vec<f64> {
    let n = points.nrows();
    let k = min_samples.clamp(1, n.max(1));
    let rows: Vec<Vec<f64>> = (0..n).map(|i| row(&points, i)).collect();
    par::map_range(n, |i| {
        let mut d: Vec<f64> = rows.iter().map(|r| euclidean(&rows[i], r)).collect();
        d.select_nth_unstable_by(k - 1, f64::total_cmp);
        d[k - 1]
    })
}

/// `max(core_i, core_j, d(i, j))`, zero on the diagonal.
pub fn mutual_reachability(points: ArrayView2<f64>, core: &[f64]) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| row(&points, i)).collect();
    par::map_range(n, |i| {
        (0..n)
            .map(|j| {
                if i == j {
                    0.0
                } else {
                    euclidean(&rows[i], &rows[j]).max(core[i]).max(core[j])
                }
            })
            .collect()
    })
}

/// Minimum spanning tree of the mutual-reachability graph (dense Prim),
/// edges sorted by weight then endpoints.
pub fn mst_mutual_reachability(points: ArrayView2<f64>, core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = points.nrows();
    if n < 2 {
        return Vec::new();
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| row(&points, i)).collect();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = euclidean(&rows[current], &rows[j]).max(core[current]).max(core[j]);
            if w < best[j] {
                best[j] = w;
                from[j] = current;
            }
            if best[j] < next_w || next == usize::MAX {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next].min(next), from[next].max(next), next_w));
        current = next;
    }
    sort_edges(&mut edges);
    edges
}

pub(crate) fn sort_edges(edges: &mut [(usize, usize, f64)]) {
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
}

/// Single-linkage dendrogram from sorted MST edges.
pub fn single_linkage(n: usize, sorted_edges: &[(usize, usize, f64)]) -> Vec<LinkageStep> {
    let mut uf = UnionFind::new(n);
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut steps = Vec::with_capacity(n.saturating_sub(1));
    for &(a, b, w) in sorted_edges {
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            continue;
        }
        let (la, lb) = (node_of[ra], node_of[rb]);
        let size = uf.size_of(ra) + uf.size_of(rb);
        let root = uf.union(ra, rb);
        node_of[root] = n + steps.len();
        steps.push(LinkageStep {
            left: la.min(lb),
            right: la.max(lb),
            distance: w,
            size,
        });
    }
    steps
}

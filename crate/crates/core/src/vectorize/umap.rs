//! UMAP over an exact nearest-neighbour graph.
//!
//! The layout follows the reference algorithm: per-point bandwidths from a
//! binary search on the smooth kNN distance, fuzzy union of the directed
//! graph, and stochastic gradient descent with negative sampling using the
//! `1 / (1 + a·d^{2b})` low-dimensional similarity.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Embedding, HellingerRoots, SparseVector};
use crate::{par, Error, Result};

const SMOOTH_K_TOLERANCE: f64 = 1e-5;
const MIN_K_DIST_SCALE: f64 = 1e-3;
const GRADIENT_CLIP: f64 = 4.0;
const INIT_RANGE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UmapParams {
    pub n_components: usize,
    /// Neighbourhood size, counting the point itself.
    pub n_neighbors: usize,
    pub n_epochs: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    pub repulsion_strength: f64,
    pub seed: u64,
}

impl UmapParams {
    /// Defaults: 10 dimensions, 5 neighbours, 1000 epochs, min_dist 0.1,
    /// spread 1.0.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            n_components: 10,
            n_neighbors: 5,
            n_epochs: 1000,
            min_dist: 0.1,
            spread: 1.0,
            negative_sample_rate: 5,
            learning_rate: 1.0,
            repulsion_strength: 1.0,
            seed,
        }
    }
}

/// Exact k nearest neighbours per point, the point itself first.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

impl KnnGraph {
    pub fn k(&self) -> usize {
        self.indices.first().map_or(0, Vec::len)
    }
}

/// Brute-force kNN under `dist`. Each row is computed independently, so the
/// result does not depend on the thread count.
pub fn exact_knn<F>(n: usize, k: usize, dist: F) -> Result<KnnGraph>
where
    F: Fn(usize, usize) -> f64 + Send + Sync,
{
    if k == 0 || n < k {
        return Err(Error::TooFewPoints { needed: k.max(1), got: n });
    }
    let rows: Vec<Result<(Vec<usize>, Vec<f64>)>> = par::map_range(n, |i| {
        let mut row: Vec<(f64, usize)> = Vec::with_capacity(n);
        for j in 0..n {
            let d = if i == j { 0.0 } else { dist(i, j) };
            if !d.is_finite() {
                return Err(Error::NonFiniteDistance(i, j));
            }
            row.push((d, j));
        }
        row.select_nth_unstable_by(k - 1, |a, b| cmp_neighbour(i, a, b));
        row.truncate(k);
        row.sort_by(|a, b| cmp_neighbour(i, a, b));
        Ok(row.into_iter().map(|(d, j)| (j, d)).unzip())
    });
    let mut indices = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    for r in rows {
        let (ix, ds) = r?;
        indices.push(ix);
        distances.push(ds);
    }
    Ok(KnnGraph { indices, distances })
}

fn cmp_neighbour(i: usize, a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0)
        .then((a.1 != i).cmp(&(b.1 != i)))
        .then(a.1.cmp(&b.1))
}

/// Per-point `(rho, sigma)`: `rho` is the distance to the nearest distinct
/// neighbour and `sigma` solves
/// `Σ_j exp(−max(0, d_j − rho) / sigma) = log₂(k)` over the non-self
/// neighbours.
pub fn smooth_knn_dist(knn: &KnnGraph) -> (Vec<f64>, Vec<f64>) {
    let k = knn.k();
    let target = (k as f64).log2();
    let n = knn.distances.len();
    let total: f64 = knn.distances.iter().flatten().sum();
    let mean_all = if n * k > 0 { total / (n * k) as f64 } else { 0.0 };

    let mut rhos = Vec::with_capacity(n);
    let mut sigmas = Vec::with_capacity(n);
    for row in &knn.distances {
        let rest = &row[1.min(row.len())..];
        let rho = rest.iter().copied().find(|&d| d > 0.0).unwrap_or(0.0);
        let (mut lo, mut hi, mut mid) = (0.0, f64::INFINITY, 1.0);
        for _ in 0..64 {
            let psum: f64 = rest
                .iter()
                .map(|&d| {
                    let gap = d - rho;
                    if gap > 0.0 {
                        (-gap / mid).exp()
                    } else {
                        1.0
                    }
                })
                .sum();
            if (psum - target).abs() < SMOOTH_K_TOLERANCE {
                break;
            }
            if psum > target {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
            }
        }
        let floor = if rho > 0.0 {
            MIN_K_DIST_SCALE * row.iter().sum::<f64>() / row.len() as f64
        } else {
            MIN_K_DIST_SCALE * mean_all
        };
        rhos.push(rho);
        sigmas.push(mid.max(floor));
    }
    (rhos, sigmas)
}

/// Symmetric fuzzy graph as sorted `(i, j) → weight` entries, both
/// directions present.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

/// Membership strengths `exp(−max(0, d − rho_i)/sigma_i)` combined by the
/// fuzzy union `a + b − ab`.
pub fn fuzzy_simplicial_set(knn: &KnnGraph) -> FuzzyGraph {
    let (rhos, sigmas) = smooth_knn_dist(knn);
    let n = knn.indices.len();
    let mut directed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        for (&j, &d) in knn.indices[i].iter().zip(&knn.distances[i]) {
            if j == i {
                continue;
            }
            let gap = d - rhos[i];
            let w = if gap <= 0.0 || sigmas[i] == 0.0 {
                1.0
            } else {
                (-gap / sigmas[i]).exp()
            };
            directed.insert((i, j), w);
        }
    }
    let mut sym: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(i, j), &w) in &directed {
        let wt = directed.get(&(j, i)).copied().unwrap_or(0.0);
        let v = w + wt - w * wt;
        sym.insert((i, j), v);
        sym.insert((j, i), v);
    }
    FuzzyGraph {
        n,
        edges: sym.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
    }
}

/// Least-squares fit of `1 / (1 + a·x^{2b})` to the target curve that is 1
/// below `min_dist` and decays as `exp(−(x − min_dist)/spread)` beyond it.
pub fn fit_curve(spread: f64, min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| if x < min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();
    let loss = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| (1.0 / (1.0 + a * x.powf(2.0 * b)) - y).powi(2))
            .sum()
    };

    // Levenberg-Marquardt on the two parameters.
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let mut current = loss(a, b);
    for _ in 0..500 {
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x <= 0.0 {
                continue;
            }
            let p = x.powf(2.0 * b);
            let denom = 1.0 + a * p;
            let r = 1.0 / denom - y;
            let da = -p / (denom * denom);
            let db = -a * p * 2.0 * x.ln() / (denom * denom);
            let g = [da, db];
            for u in 0..2 {
                jtr[u] += g[u] * r;
                for v in 0..2 {
                    jtj[u][v] += g[u] * g[v];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let m = [
                [jtj[0][0] * (1.0 + lambda), jtj[0][1]],
                [jtj[1][0], jtj[1][1] * (1.0 + lambda)],
            ];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det;
            let step_b = -(m[0][0] * jtr[1] - m[1][0] * jtr[0]) / det;
            let (na, nb) = (a + step_a, b + step_b);
            let trial = if na > 0.0 && nb > 0.0 { loss(na, nb) } else { f64::INFINITY };
            if trial < current {
                let gain = current - trial;
                a = na;
                b = nb;
                current = trial;
                lambda = (lambda / 10.0).max(1e-12);
                improved = gain > 1e-16 * current.max(1e-300);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

/// Optimises a layout for a precomputed kNN graph.
pub fn umap_from_knn(knn: &KnnGraph, params: &UmapParams) -> Result<Array2<f64>> {
    let n = knn.indices.len();
    let dim = params.n_components;
    if dim == 0 {
        return Err(Error::Invalid("n_components must be positive".into()));
    }
    let graph = fuzzy_simplicial_set(knn);
    let (a, b) = fit_curve(params.spread, params.min_dist);

    let max_w = graph.edges.iter().map(|e| e.2).fold(0.0, f64::max);
    let cutoff = if params.n_epochs > 0 { max_w / params.n_epochs as f64 } else { 0.0 };
    let edges: Vec<(usize, usize, f64)> = graph
        .edges
        .into_iter()
        .filter(|e| e.2 >= cutoff && e.2 > 0.0)
        .collect();
    let epochs_per_sample: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
    let neg_rate = params.negative_sample_rate.max(1) as f64;
    let epochs_per_negative: Vec<f64> = epochs_per_sample.iter().map(|e| e / neg_rate).collect();
    let mut next_sample = epochs_per_sample.clone();
    let mut next_negative = epochs_per_negative.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut emb: Vec<f64> = (0..n * dim)
        .map(|_| rng.random_range(-INIT_RANGE..INIT_RANGE))
        .collect();

    let clip = |g: f64| g.clamp(-GRADIENT_CLIP, GRADIENT_CLIP);
    let gamma = params.repulsion_strength;
    let mut diff = vec![0.0; dim];
    for epoch in 0..params.n_epochs {
        let e = epoch as f64;
        let alpha = params.learning_rate * (1.0 - e / params.n_epochs as f64);
        for (idx, &(head, tail, _)) in edges.iter().enumerate() {
            if next_sample[idx] > e {
                continue;
            }
            let dist_sq = sq_dist(&emb, head, tail, dim, &mut diff);
            let coeff = if dist_sq > 0.0 {
                -2.0 * a * b * dist_sq.powf(b - 1.0) / (a * dist_sq.powf(b) + 1.0)
            } else {
                0.0
            };
            for d in 0..dim {
                let g = clip(coeff * diff[d]) * alpha;
                emb[head * dim + d] += g;
                emb[tail * dim + d] -= g;
            }
            next_sample[idx] += epochs_per_sample[idx];

            let n_neg = ((e - next_negative[idx]) / epochs_per_negative[idx]).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let other = rng.random_range(0..n);
                let dist_sq = sq_dist(&emb, head, other, dim, &mut diff);
                let coeff = if dist_sq > 0.0 {
                    2.0 * gamma * b / ((0.001 + dist_sq) * (a * dist_sq.powf(b) + 1.0))
                } else if other == head {
                    continue;
                } else {
                    0.0
                };
                for d in 0..dim {
                    let g = if coeff > 0.0 { clip(coeff * diff[d]) } else { GRADIENT_CLIP };
                    emb[head * dim + d] += g * alpha;
                }
            }
            next_negative[idx] += n_neg as f64 * epochs_per_negative[idx];
        }
    }
    if emb.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid("layout diverged to non-finite coordinates".into()));
    }
    Ok(Array2::from_shape_vec((n, dim), emb).expect("shape matches buffer"))
}

fn sq_dist(emb: &[f64], i: usize, j: usize, dim: usize, diff: &mut [f64]) -> f64 {
    let mut s = 0.0;
    for d in 0..dim {
        let v = emb[i * dim + d] - emb[j * dim + d];
        diff[d] = v;
        s += v * v;
    }
    s
}

/// Reduces tf-idf vectors with UMAP under the Hellinger metric.
pub fn umap_reduce(
    article_ids: Vec<String>,
    vectors: &[SparseVector],
    params: &UmapParams,
) -> Result<Embedding> {
    let n = vectors.len();
    if article_ids.len() != n {
        return Err(Error::Invalid("one id per vector required".into()));
    }
    if n < params.n_neighbors + 1 {
        return Err(Error::TooFewPoints {
            needed: params.n_neighbors + 1,
            got: n,
        });
    }
    let roots: Vec<HellingerRoots> = par::map_slice(vectors, HellingerRoots::new);
    let knn = exact_knn(n, params.n_neighbors, |i, j| roots[i].distance(&roots[j]))?;
    let coordinates = umap_from_knn(&knn, params)?;
    Ok(Embedding {
        article_ids,
        coordinates,
    })
}

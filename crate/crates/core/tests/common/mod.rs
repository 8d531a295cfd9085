//! Independent oracles and fixture builders shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use ndarray::Array2;
use newsloc::cluster::LinkageStep;
use newsloc::corpus::Article;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 3, 1).unwrap()
}

// ---------------------------------------------------------------- dedup

/// A generated article with the exact sentences its body was built from.
pub struct DedupFixture {
    pub article: Article,
    pub sentences: Vec<String>,
}

fn fixture_sentence(rng: &mut ChaCha8Rng, words: &[String]) -> String {
    let len = rng.random_range(6..=14);
    let mut w: Vec<String> = (0..len).map(|_| words.choose(rng).unwrap().clone()).collect();
    let mut first = w[0].chars();
    w[0] = first.next().unwrap().to_uppercase().chain(first).collect();
    format!("{}.", w.join(" "))
}

/// Re-cases one word and widens one gap; the sentence key is unchanged.
fn perturb(rng: &mut ChaCha8Rng, s: &str) -> String {
    let mut words: Vec<String> = s.split(' ').map(String::from).collect();
    if words.len() > 2 {
        let i = rng.random_range(1..words.len() - 1);
        words[i] = words[i].to_uppercase();
    }
    let gap = rng.random_range(1..words.len());
    let mut out = words[..gap].join(" ");
    out.push_str("  ");
    out.push_str(&words[gap..].join(" "));
    out
}

/// Stories republished in several versions, with boilerplate shared widely.
/// `boilerplate_everywhere` puts the same boilerplate sentence in every
/// article.
pub fn dedup_corpus(seed: u64, max_articles: usize, boilerplate_everywhere: bool) -> Vec<DedupFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<String> = (0..300).map(|i| format!("w{i}x")).collect();
    let boiler: Vec<String> = (0..2)
        .map(|_| {
            let mut s = fixture_sentence(&mut rng, &words);
            while s.split_whitespace().count() < 10 {
                s = fixture_sentence(&mut rng, &words);
            }
            s
        })
        .collect();
    let mut out = Vec::new();
    let mut story = 0;
    while out.len() < max_articles {
        story += 1;
        let base: Vec<String> = (0..rng.random_range(3..=8)).map(|_| fixture_sentence(&mut rng, &words)).collect();
        let versions = rng.random_range(1..=3).min(max_articles - out.len());
        for v in 0..versions {
            let mut sentences = Vec::new();
            for s in &base {
                if v > 0 && !rng.random_bool(0.7) {
                    continue;
                }
                sentences.push(if v > 0 && rng.random_bool(0.3) { perturb(&mut rng, s) } else { s.clone() });
            }
            for _ in 0..rng.random_range(0..=2) {
                let at = rng.random_range(0..=sentences.len());
                sentences.insert(at, fixture_sentence(&mut rng, &words));
            }
            if boilerplate_everywhere {
                sentences.push(boiler[0].clone());
            } else if rng.random_bool(0.4) {
                sentences.push(boiler.choose(&mut rng).unwrap().clone());
            }
            let id = format!("s{story:03}-v{v}-{}", rng.random_range(0..1000));
            let body = sentences.join(" ");
            out.push(DedupFixture { article: Article::new(id, format!("Story {story}"), body, date(), vec![]), sentences });
        }
    }
    out
}

fn key(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Brute-force pairwise comparison of sentence sets, components by DFS.
/// Returns kept ids in input order.
pub fn dedup_oracle(corpus: &[DedupFixture], min_words: usize, max_docs: usize, fraction: f64) -> Vec<String> {
    let sets: Vec<BTreeSet<String>> = corpus
        .iter()
        .map(|f| f.sentences.iter().filter(|s| s.split_whitespace().count() >= min_words).map(|s| key(s)).collect())
        .collect();
    let eligible: Vec<BTreeSet<String>> = sets
        .iter()
        .map(|set| {
            set.iter()
                .filter(|s| sets.iter().filter(|other| other.contains(*s)).count() <= max_docs)
                .cloned()
                .collect()
        })
        .collect();
    let n = corpus.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let smaller = eligible[i].len().min(eligible[j].len());
            let shared = eligible[i].intersection(&eligible[j]).count();
            if smaller > 0 && shared as f64 >= fraction * smaller as f64 {
                adj[i].push(j);
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = s;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if comp[y] == usize::MAX {
                    comp[y] = s;
                    stack.push(y);
                }
            }
        }
    }
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let e = best.entry(comp[i]).or_insert(i);
        let (a, b) = (&corpus[i].article, &corpus[*e].article);
        let (la, lb) = (a.body.chars().count(), b.body.chars().count());
        if la > lb || (la == lb && a.id < b.id) {
            *e = i;
        }
    }
    let kept: BTreeSet<usize> = best.into_values().collect();
    kept.into_iter().map(|i| corpus[i].article.id.clone()).collect()
}

// ---------------------------------------------------------------- geometry

/// Winding number of a closed ring around a point, by summed turning angle.
pub fn winding_number(p: (f64, f64), ring: &[(f64, f64)]) -> i32 {
    let mut total = 0.0;
    for w in ring.windows(2) {
        let a = (w[0].0 - p.0, w[0].1 - p.1);
        let b = (w[1].0 - p.0, w[1].1 - p.1);
        total += (a.0 * b.1 - a.1 * b.0).atan2(a.0 * b.0 + a.1 * b.1);
    }
    (total / std::f64::consts::TAU).round() as i32
}

/// Star-shaped simple polygon around `centre`, closed.
pub fn random_polygon(rng: &mut ChaCha8Rng, centre: (f64, f64), vertices: usize) -> Vec<(f64, f64)> {
    let mut ring: Vec<(f64, f64)> = (0..vertices)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / vertices as f64;
            let r = rng.random_range(0.2..1.0);
            (centre.0 + r * t.cos(), centre.1 + r * t.sin())
        })
        .collect();
    ring.push(ring[0]);
    ring
}

// ---------------------------------------------------------------- clustering

pub fn two_blobs(per: usize, separation: f64, seed: u64) -> (Array2<f64>, Vec<i32>) {
    blobs(per, &[(0.0, 0.0), (separation, 0.0)], 1.0, seed)
}

/// Gaussian blobs in the plane with the given centres.
pub fn blobs(per: usize, centres: &[(f64, f64)], sd: f64, seed: u64) -> (Array2<f64>, Vec<i32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sd).unwrap();
    let mut pts = Array2::zeros((per * centres.len(), 2));
    let mut truth = Vec::new();
    for (c, &(x, y)) in centres.iter().enumerate() {
        for i in 0..per {
            pts[[c * per + i, 0]] = x + normal.sample(&mut rng);
            pts[[c * per + i, 1]] = y + normal.sample(&mut rng);
            truth.push(c as i32);
        }
    }
    (pts, truth)
}

fn dist(p: &Array2<f64>, i: usize, j: usize) -> f64 {
    p.row(i).iter().zip(p.row(j).iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Mutual-reachability matrix by full sorting of each row.
pub fn brute_mutual_reachability(p: &Array2<f64>, min_samples: usize) -> Vec<Vec<f64>> {
    let n = p.nrows();
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n).map(|j| dist(p, i, j)).collect();
            d.sort_by(f64::total_cmp);
            d[min_samples.min(n) - 1]
        })
        .collect();
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { dist(p, i, j).max(core[i]).max(core[j]) }).collect())
        .collect()
}

/// Naive agglomerative single linkage on a dense matrix: each step scans all
/// cluster pairs. Returns merge heights in order and the cluster lists after
/// each merge.
pub fn brute_single_linkage(d: &[Vec<f64>]) -> Vec<(f64, Vec<BTreeSet<usize>>)> {
    let n = d.len();
    let mut clusters: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
    let mut between: Vec<Vec<f64>> = d.to_vec();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let (mut bi, mut bj, mut bd) = (0, 1, f64::INFINITY);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                if between[i][j] < bd {
                    (bi, bj, bd) = (i, j, between[i][j]);
                }
            }
        }
        let merged = clusters.remove(bj);
        clusters[bi].extend(merged);
        let row_j = between.remove(bj);
        for r in between.iter_mut() {
            r.remove(bj);
        }
        for k in 0..clusters.len() {
            let v = between[bi][k].min(row_j[if k < bj { k } else { k + 1 }]);
            between[bi][k] = v;
            between[k][bi] = v;
        }
        between[bi][bi] = 0.0;
        out.push((bd, clusters.clone()));
    }
    out
}

pub type Partition = BTreeSet<BTreeSet<usize>>;

/// Flat clusters of a dendrogram after applying every merge at height ≤ `h`.
pub fn cut_linkage(linkage: &[LinkageStep], n: usize, h: f64) -> Partition {
    let mut members: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    for s in linkage {
        let mut m = members[s.left].clone();
        m.extend(members[s.right].iter().copied());
        members.push(m);
        if s.distance <= h {
            alive.remove(&s.left);
            alive.remove(&s.right);
            alive.insert(members.len() - 1);
        }
    }
    alive.into_iter().map(|i| members[i].clone()).collect()
}

/// Partition of the oracle's merge sequence at height `h`.
pub fn cut_brute(merges: &[(f64, Vec<BTreeSet<usize>>)], n: usize, h: f64) -> Partition {
    let mut current: Partition = (0..n).map(|i| BTreeSet::from([i])).collect();
    for (d, clusters) in merges {
        if *d <= h {
            current = clusters.iter().cloned().collect();
        }
    }
    current
}

/// Adjusted Rand index from the contingency table.
pub fn ari(a: &[i32], b: &[i32]) -> f64 {
    let n = a.len() as f64;
    let mut table: HashMap<(i32, i32), f64> = HashMap::new();
    let mut ra: HashMap<i32, f64> = HashMap::new();
    let mut rb: HashMap<i32, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1.0;
        *ra.entry(x).or_default() += 1.0;
        *rb.entry(y).or_default() += 1.0;
    }
    let c2 = |x: f64| x * (x - 1.0) / 2.0;
    let index: f64 = table.values().map(|&v| c2(v)).sum();
    let sa: f64 = ra.values().map(|&v| c2(v)).sum();
    let sb: f64 = rb.values().map(|&v| c2(v)).sum();
    let expected = sa * sb / c2(n);
    let max = (sa + sb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

// ---------------------------------------------------------------- ranks

/// `1 − 6Σd²/(n(n²−1))`, valid without ties.
pub fn rank_formula(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64 + 1.0;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

// ---------------------------------------------------------------- profiles

/// Random membership vectors over `k` clusters plus noise.
pub fn random_memberships(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<newsloc::cluster::ArticleMembership> {
    (0..n)
        .map(|i| {
            let raw: Vec<f64> = (0..=k).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = raw.iter().sum();
            newsloc::cluster::ArticleMembership { article_id: format!("a{i:03}"), probs: raw.iter().map(|x| x / s).collect() }
        })
        .collect()
}

/// Location profile as a literal mean: scan every article, test set membership.
pub fn profile_brute(articles: &BTreeSet<String>, memberships: &[newsloc::cluster::ArticleMembership]) -> Vec<f64> {
    let k = memberships[0].probs.len();
    let mut acc = vec![0.0; k];
    let mut count = 0.0;
    for m in memberships {
        if articles.contains(&m.article_id) {
            count += 1.0;
            for c in 0..k {
                acc[c] += m.probs[c];
            }
        }
    }
    acc.into_iter().map(|x| x / count).collect()
}

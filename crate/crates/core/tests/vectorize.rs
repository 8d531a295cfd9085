mod common;

use std::collections::HashMap;

use newsloc::vectorize::{
    build_vocabulary, exact_knn, fuzzy_simplicial_set, hellinger, hellinger_dense, read_embedding_bin, tfidf,
    umap_reduce, write_embedding_bin, SparseVector, UmapParams,
};
use proptest::collection::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(v: &SparseVector, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (i, x) in v.iter() {
        out[i as usize] = x;
    }
    out
}

/// Bhattacharyya-coefficient form: H² = 1 − Σ √(p q).
fn hellinger_bc(p: &[f64], q: &[f64]) -> f64 {
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    let bc: f64 = p.iter().zip(q).map(|(a, b)| (a / sp * b / sq).sqrt()).sum();
    (1.0 - bc).max(0.0).sqrt()
}

fn weights(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(prop_oneof![Just(0.0), 0.001f64..10.0], dim).prop_filter("non-zero", |v| v.iter().any(|&x| x > 0.0))
}

fn sparse(v: &[f64]) -> SparseVector {
    let (i, x): (Vec<u32>, Vec<f64>) = v.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(i, &x)| (i as u32, x)).unzip();
    SparseVector::new(i, x).unwrap()
}

proptest! {
    #[test]
    fn hellinger_is_a_bounded_metric(p in weights(10), q in weights(10), r in weights(10)) {
        let (a, b, c) = (sparse(&p), sparse(&q), sparse(&r));
        let ab = hellinger(&a, &b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ab - hellinger(&b, &a)).abs() <= 1e-15);
        prop_assert!(hellinger(&a, &a).abs() <= 1e-12);
        prop_assert!(hellinger(&a, &c) <= ab + hellinger(&b, &c) + 1e-9);
        prop_assert!((ab - hellinger_bc(&p, &q)).abs() <= 1e-6);
    }

    #[test]
    fn hellinger_ignores_scale(p in weights(8), q in weights(8), s in 0.01f64..100.0) {
        let scaled: Vec<f64> = p.iter().map(|x| x * s).collect();
        let d = hellinger(&sparse(&p), &sparse(&q));
        prop_assert!((d - hellinger(&sparse(&scaled), &sparse(&q))).abs() <= 1e-9);
        prop_assert!((d - hellinger_dense(&p, &q).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn fuzzy_graph_is_symmetric_with_unit_bounded_weights(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> = (0..40).map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))).collect();
        let knn = exact_knn(40, 6, |i, j| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()).unwrap();
        let graph = fuzzy_simplicial_set(&knn);
        let mut w: HashMap<(usize, usize), f64> = HashMap::new();
        for &(i, j, x) in &graph.edges {
            prop_assert!(x > 0.0 && x <= 1.0 + 1e-12);
            prop_assert!(i != j);
            w.insert((i, j), x);
        }
        for (&(i, j), &x) in &w {
            prop_assert_eq!(w.get(&(j, i)).copied(), Some(x));
        }
    }
}

#[test]
fn hellinger_dense_rejects_negative_components() {
    assert!(hellinger_dense(&[0.5, -0.1], &[0.5, 0.5]).is_err());
    assert!(hellinger_dense(&[0.5, 0.5], &[1.0]).is_err());
}

#[test]
fn tfidf_matches_hand_computation() {
    let docs: Vec<Vec<String>> = [["apple", "apple", "pear"].as_slice(), &["pear", "plum"], &["plum", "fig"]]
        .iter()
        .map(|d| d.iter().map(|s| s.to_string()).collect())
        .collect();
    let vocab = build_vocabulary(&docs, 100, 1).unwrap();
    let v = tfidf(&docs[0], &vocab, 3);
    let idf = |df: f64| (4.0 / (1.0 + df)).ln() + 1.0;
    let got = dense(&v, vocab.len());
    assert!((got[vocab.id("apple").unwrap() as usize] - 2.0 * idf(1.0)).abs() < 1e-12);
    assert!((got[vocab.id("pear").unwrap() as usize] - idf(2.0)).abs() < 1e-12);
    assert_eq!(got[vocab.id("fig").unwrap() as usize], 0.0);
}

#[test]
fn knn_matches_sorted_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..100.0)).collect();
    let knn = exact_knn(60, 7, |i, j| (pts[i] - pts[j]).abs()).unwrap();
    for i in 0..60 {
        let mut all: Vec<(f64, usize)> = (0..60).map(|j| ((pts[i] - pts[j]).abs(), j)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        assert_eq!(knn.indices[i][0], i);
        let want: Vec<f64> = all[..7].iter().map(|x| x.0).collect();
        assert_eq!(knn.distances[i], want);
    }
}

fn random_docs(seed: u64, n: usize) -> Vec<SparseVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let topic = (i % 3) as u32 * 10;
            let idx: Vec<u32> = (0..10).filter(|_| rng.random_bool(0.6)).map(|t| topic + t).collect();
            let idx = if idx.is_empty() { vec![topic] } else { idx };
            let vals = idx.iter().map(|_| rng.random_range(0.5..3.0)).collect();
            SparseVector::new(idx, vals).unwrap()
        })
        .collect()
}

#[test]
fn umap_is_deterministic_and_thread_count_independent() {
    let docs = random_docs(4, 90);
    let ids: Vec<String> = (0..90).map(|i| format!("a{i}")).collect();
    let mut params = UmapParams::with_seed(17);
    params.n_epochs = 150;
    params.n_neighbors = 10;
    let a = umap_reduce(ids.clone(), &docs, &params).unwrap();
    let b = newsloc::par::single_threaded(|| umap_reduce(ids.clone(), &docs, &params).unwrap());
    assert_eq!(a, b);
    params.seed = 18;
    let c = umap_reduce(ids, &docs, &params).unwrap();
    assert_ne!(a.coordinates, c.coordinates);
    assert!(a.coordinates.iter().all(|x| x.is_finite()));
}

#[test]
fn embedding_binary_round_trip() {
    let docs = random_docs(5, 40);
    let ids: Vec<String> = (0..40).map(|i| format!("a{i}")).collect();
    let mut params = UmapParams::with_seed(3);
    params.n_epochs = 50;
    params.n_neighbors = 8;
    let emb = umap_reduce(ids, &docs, &params).unwrap();
    let mut buf = Vec::new();
    write_embedding_bin(&emb, &params, &mut buf).unwrap();
    let (header, back) = read_embedding_bin(buf.as_slice()).unwrap();
    assert_eq!(back, emb);
    assert_eq!(header.seed, 3);
    assert_eq!(header.shape, [40, params.n_components]);
}

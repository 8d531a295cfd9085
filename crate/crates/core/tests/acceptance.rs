//! Acceptance criteria 1–11. Each test prints one PASS/FAIL line.
#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use common::*;
use newsloc::characterise::{all_profiles, location_profile, neighbourhood_profile, zone_mention_index, LocationProfile, MentionIndex};
use newsloc::cluster::{
    hdbscan, mst_mutual_reachability, core_distances, single_linkage, soft_memberships, ArticleMembership,
    ClusterModel, HdbscanParams, NOISE,
};
use newsloc::corpus::{dedup, DedupParams};
use newsloc::evaluate::{
    grid_search, macro_f1, pair_confusion, spearman, spearman_per_cluster, write_grid_csv, GridSpec, OutlierPolicy,
    PairConfusion,
};
use newsloc::geoparse::{build_gazetteer, point_in_ring, Geoparser, TextField, Neighbourhood, ZoneIndex};
use newsloc::par;
use newsloc::pipeline::{prepare, run_clustering, ClusteringParams};
use newsloc::preprocess::{Blocklist, Preprocessor};
use newsloc::synthgen::{generate, SynthCorpus, SynthSpec};
use newsloc::vectorize::{exact_knn, hellinger, umap_from_knn, Embedding, SparseVector, UmapParams};
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, pass: bool, detail: String) {
    println!("{} criterion {n}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn desk_params(seed: u64) -> ClusteringParams {
    let mut p = ClusteringParams::with_seed(seed);
    p.umap.n_components = 5;
    p.umap.n_neighbors = 15;
    p.umap.n_epochs = 500;
    p.hdbscan.min_cluster_size = 25;
    p
}

fn labels_by_id(emb: &Embedding, model: &ClusterModel) -> HashMap<String, i32> {
    emb.article_ids.iter().cloned().zip(model.labels.iter().copied()).collect()
}

// ---------------------------------------------------------------- shared E2E run

struct E2e {
    synth: SynthCorpus,
    elapsed: Duration,
    macro_f1: f64,
    memberships: Vec<ArticleMembership>,
    model: ClusterModel,
    zone_profiles: Vec<LocationProfile>,
    article_ids: Vec<String>,
}

static E2E: Lazy<E2e> = Lazy::new(|| {
    par::single_threaded(|| {
        let start = Instant::now();
        let synth = generate(&SynthSpec::default()).unwrap();
        let (articles, _) = dedup(synth.articles.clone(), &DedupParams::default());
        let (gazetteer, rejected) = build_gazetteer(synth.gazetteer.clone());
        assert!(rejected.is_empty());
        let geoparser = Geoparser::new(gazetteer, ZoneIndex::new(synth.zones.clone()));
        let blocklist = Blocklist::default();
        let prepared = prepare(articles, &geoparser, &blocklist, 40, &Preprocessor::default());
        let run = run_clustering(&prepared.docs, &desk_params(synth.truth.seed)).unwrap();
        let labels = labels_by_id(&run.embedding, &run.model);
        let confusion = pair_confusion(&labels, &synth.annotations, OutlierPolicy::TreatAsCluster).unwrap();
        let score = macro_f1(&confusion).unwrap().score;
        let index = zone_mention_index(&prepared.mentions, &blocklist);
        let (zone_profiles, _) = all_profiles(&index, &run.memberships).unwrap();
        E2e {
            elapsed: start.elapsed(),
            synth,
            macro_f1: score,
            memberships: run.memberships,
            model: run.model,
            zone_profiles,
            article_ids: run.embedding.article_ids,
        }
    })
});

/// Planted topic with the most hard-labelled members in each cluster.
fn cluster_topics(e: &E2e) -> Vec<usize> {
    let topic = e.synth.truth.topic_of();
    let k = e.model.n_clusters();
    let t = e.synth.truth.topics.len();
    let mut table = vec![vec![0usize; t]; k];
    for (id, &l) in e.article_ids.iter().zip(&e.model.labels) {
        if l != NOISE {
            table[l as usize][topic[id.as_str()]] += 1;
        }
    }
    table.iter().map(|row| (0..t).max_by_key(|&i| (row[i], std::cmp::Reverse(i))).unwrap()).collect()
}

// ---------------------------------------------------------------- 1

#[test]
fn criterion_01_dedup_matches_oracle() {
    let mut mismatches = Vec::new();
    let mut spent = Duration::ZERO;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..50u64 {
        let size = rng.random_range(5..=200);
        let corpus = dedup_corpus(seed, size, false);
        let expected = dedup_oracle(&corpus, 10, 20, 0.5);
        let articles = corpus.iter().map(|f| f.article.clone()).collect();
        let t = Instant::now();
        let (kept, _) = dedup(articles, &DedupParams::default());
        spent += t.elapsed();
        let got: Vec<String> = kept.into_iter().map(|a| a.id).collect();
        if got != expected {
            mismatches.push(seed);
        }
    }
    verdict(
        1,
        mismatches.is_empty() && spent < Duration::from_secs(5),
        format!("50 corpora, mismatching seeds {mismatches:?}, dedup time {spent:?} (< 5 s)"),
    );
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_02_geoparse_recovers_planted_mentions() {
    let synth = generate(&SynthSpec::default()).unwrap();
    let (gazetteer, _) = build_gazetteer(synth.gazetteer.clone());
    let geoparser = Geoparser::new(gazetteer, ZoneIndex::new(synth.zones.clone()));
    let found = geoparser.process_all(&synth.articles);
    let mut detected: HashMap<(&str, TextField, usize, usize), Option<&str>> = HashMap::new();
    for am in &found {
        for m in &am.mentions {
            detected.insert((am.article_id.as_str(), m.field, m.start, m.end), m.zone.as_deref());
        }
    }
    let planted: Vec<_> = synth.truth.mentions.iter().filter(|m| m.zone.is_some()).collect();
    let correct = planted
        .iter()
        .filter(|m| {
            let key = (m.article_id.as_str(), m.field, m.start, m.end);
            detected.get(&key).is_some_and(|z| *z == m.zone.as_deref())
        })
        .count();
    let rate = correct as f64 / planted.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut disagreements = 0;
    let mut checked = 0;
    while checked < 1000 {
        let vertices = rng.random_range(3..12);
        let ring = random_polygon(&mut rng, (0.0, 0.0), vertices);
        for _ in 0..100 {
            let p = (rng.random_range(-1.1..1.1), rng.random_range(-1.1..1.1));
            if let Some(inside) = point_in_ring(p, &ring) {
                checked += 1;
                if inside != (winding_number(p, &ring) != 0) {
                    disagreements += 1;
                }
            }
        }
    }
    verdict(
        2,
        rate >= 0.99 && disagreements == 0,
        format!(
            "{correct}/{} planted mentions exact ({:.2}%, need ≥ 99%); point-in-polygon vs winding number: {disagreements} disagreements on {checked} points",
            planted.len(),
            rate * 100.0
        ),
    );
}

// ---------------------------------------------------------------- 3

fn random_sparse(rng: &mut ChaCha8Rng, dim: u32) -> SparseVector {
    let mut idx = Vec::new();
    let mut val = Vec::new();
    for i in 0..dim {
        if rng.random_bool(0.4) {
            idx.push(i);
            val.push(rng.random_range(0.01..5.0));
        }
    }
    SparseVector::new(idx, val).unwrap()
}

#[test]
fn criterion_03_hellinger_metric() {
    let p = SparseVector::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
    let q = SparseVector::new(vec![0, 1], vec![0.25, 0.75]).unwrap();
    let disjoint = SparseVector::new(vec![2, 3], vec![1.0, 4.0]).unwrap();
    let identity = hellinger(&p, &p);
    let one = hellinger(&p, &disjoint);
    let derived = hellinger(&p, &q);
    let spot_ok = identity.abs() < 1e-12 && (one - 1.0).abs() < 1e-12 && (derived - (1.0 - 0.125f64.sqrt() - 0.375f64.sqrt()).sqrt()).abs() <= 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (a, b, c) = (random_sparse(&mut rng, 12), random_sparse(&mut rng, 12), random_sparse(&mut rng, 12));
        worst = worst.max(hellinger(&a, &c) - hellinger(&a, &b) - hellinger(&b, &c));
    }
    verdict(
        3,
        spot_ok && worst <= 1e-9,
        format!("H(p,p)={identity:e}, H(disjoint)={one}, H(derived)={derived:.6}; worst triangle excess over 1000 triples {worst:.3e} (≤ 1e-9)"),
    );
}

// ---------------------------------------------------------------- 4

fn knn_sets(rows: &[Vec<f64>], k: usize) -> Vec<BTreeSet<usize>> {
    (0..rows.len())
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..rows.len())
                .filter(|&j| j != i)
                .map(|j| (rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b).powi(2)).sum(), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d[..k].iter().map(|x| x.1).collect()
        })
        .collect()
}

#[test]
fn criterion_04_umap_sanity() {
    let (pts, _) = two_blobs(300, 20.0, 4);
    let rows: Vec<Vec<f64>> = pts.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut params = UmapParams::with_seed(11);
    params.n_components = 2;
    params.n_neighbors = 15;
    params.n_epochs = 1000;
    let embed = || {
        let knn = exact_knn(rows.len(), params.n_neighbors, |i, j| {
            rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        })
        .unwrap();
        umap_from_knn(&knn, &params).unwrap()
    };
    let t = Instant::now();
    let first = embed();
    let elapsed = t.elapsed();
    let second = embed();
    let out: Vec<Vec<f64>> = first.rows().into_iter().map(|r| r.to_vec()).collect();
    let (a, b) = (knn_sets(&rows, 5), knn_sets(&out, 5));
    let preserved = a.iter().zip(&b).map(|(x, y)| x.intersection(y).count()).sum::<usize>() as f64 / (5 * rows.len()) as f64;
    verdict(
        4,
        preserved >= 0.9 && first == second && elapsed < Duration::from_secs(60),
        format!(
            "exact 5-NN preserved {:.1}% (need ≥ 90%), identical on re-run: {}, 600 points × 1000 epochs in {elapsed:?} (< 60 s)",
            preserved * 100.0,
            first == second
        ),
    );
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_05_hdbscan_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    for f in 0..20u64 {
        let n_centres = rng.random_range(1..=4);
        let centres: Vec<(f64, f64)> = (0..n_centres).map(|_| (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))).collect();
        let per = rng.random_range(5..=300 / n_centres);
        let (pts, _) = blobs(per, &centres, rng.random_range(0.5..2.0), 100 + f);
        let n = pts.nrows();
        let min_samples = rng.random_range(1..=7).min(n);

        let core = core_distances(pts.view(), min_samples);
        let linkage = single_linkage(n, &mst_mutual_reachability(pts.view(), &core));
        let merges = brute_single_linkage(&brute_mutual_reachability(&pts, min_samples));

        let mut ours: Vec<f64> = linkage.iter().map(|s| s.distance).collect();
        let mut theirs: Vec<f64> = merges.iter().map(|m| m.0).collect();
        ours.sort_by(f64::total_cmp);
        theirs.sort_by(f64::total_cmp);
        let heights_ok = ours.len() == theirs.len() && ours.iter().zip(&theirs).all(|(a, b)| (a - b).abs() <= 1e-12);
        let mut distinct = theirs.clone();
        distinct.dedup();
        let cuts_ok = distinct.iter().all(|&h| cut_linkage(&linkage, n, h) == cut_brute(&merges, n, h));
        if !(heights_ok && cuts_ok) {
            failures.push(f);
        }
    }

    let (pts, truth) = two_blobs(150, 12.0, 55);
    let model = hdbscan(pts.view(), &HdbscanParams { min_cluster_size: 25, ..Default::default() }).unwrap();
    let score = ari(&model.labels, &truth);
    verdict(
        5,
        failures.is_empty() && model.n_clusters() == 2 && score >= 0.99,
        format!(
            "20 fixtures vs O(n³) single linkage, failing {failures:?}; two-blob: {} clusters, ARI {score:.4} (≥ 0.99)",
            model.n_clusters()
        ),
    );
}

// ---------------------------------------------------------------- 6

fn check_soft(model: &ClusterModel, memberships: &[ArticleMembership]) -> (f64, usize) {
    let mut worst_sum: f64 = 0.0;
    let mut argmax_bad = 0;
    for (m, &l) in memberships.iter().zip(&model.labels) {
        worst_sum = worst_sum.max((m.probs.iter().sum::<f64>() - 1.0).abs());
        if l != NOISE && m.argmax() != l as usize {
            argmax_bad += 1;
        }
    }
    (worst_sum, argmax_bad)
}

#[test]
fn criterion_06_soft_membership_contract() {
    let mut fixtures = vec![
        two_blobs(150, 12.0, 55),
        blobs(80, &[(0.0, 0.0), (6.0, 0.0), (3.0, 5.0)], 1.0, 6),
        blobs(60, &[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (4.0, 4.0)], 1.2, 7),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for f in 0..10 {
        let centres: Vec<(f64, f64)> = (0..rng.random_range(2..=5)).map(|_| (rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0))).collect();
        fixtures.push(blobs(rng.random_range(30..80), &centres, rng.random_range(0.5..2.0), 600 + f));
    }
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    let mut points = 0;
    for (pts, _) in &fixtures {
        let model = hdbscan(pts.view(), &HdbscanParams { min_cluster_size: 10, ..Default::default() }).unwrap();
        let emb = Embedding { article_ids: (0..pts.nrows()).map(|i| i.to_string()).collect(), coordinates: pts.clone() };
        let soft = soft_memberships(&model, &emb).unwrap();
        let (w, b) = check_soft(&model, &soft);
        worst = worst.max(w);
        bad += b;
        points += pts.nrows();
    }
    let (w, b) = check_soft(&E2E.model, &E2E.memberships);
    worst = worst.max(w);
    bad += b;
    points += E2E.memberships.len();
    verdict(
        6,
        worst <= 1e-9 && bad == 0,
        format!("{} fixtures + synthetic run, {points} points: max |Σ−1| = {worst:.2e}, argmax ≠ label on {bad}", fixtures.len()),
    );
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_07_location_profile_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut bound_violations = 0;
    let mut profiles = 0;
    for _ in 0..20 {
        let k = rng.random_range(1..=6);
        let memberships = random_memberships(&mut rng, 60, k);
        let mut index = MentionIndex::new();
        for z in 0..10 {
            let set: BTreeSet<String> = memberships.iter().filter(|_| rng.random_bool(0.2)).map(|m| m.article_id.clone()).collect();
            if !set.is_empty() {
                index.insert(format!("z{z}"), set);
            }
        }
        let neighbourhoods = [
            Neighbourhood { name: "N1".into(), zone_ids: (0..5).map(|z| format!("z{z}")).collect() },
            Neighbourhood { name: "N2".into(), zone_ids: (5..10).map(|z| format!("z{z}")).collect() },
        ];
        let mut check = |articles: &BTreeSet<String>, p: &LocationProfile| {
            profiles += 1;
            let expected = profile_brute(articles, &memberships);
            for c in 0..=k {
                worst = worst.max((p.probs[c] - expected[c]).abs());
                let vals = memberships.iter().filter(|m| articles.contains(&m.article_id)).map(|m| m.probs[c]);
                let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                if p.probs[c] < lo - 1e-15 || p.probs[c] > hi + 1e-15 {
                    bound_violations += 1;
                }
            }
        };
        for (zone, articles) in &index {
            let p = location_profile(zone, &index, &memberships).unwrap().unwrap();
            check(articles, &p);
        }
        for n in &neighbourhoods {
            let union: BTreeSet<String> = n.zone_ids.iter().filter_map(|z| index.get(z)).flatten().cloned().collect();
            if let Some(p) = neighbourhood_profile(n, &index, &memberships).unwrap() {
                check(&union, &p);
            }
        }
    }
    verdict(
        7,
        worst <= 1e-12 && bound_violations == 0,
        format!("{profiles} zone and neighbourhood profiles: max deviation from brute force {worst:.2e}, convex-bound violations {bound_violations}"),
    );
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_08_end_to_end_recovery() {
    let e = &*E2E;
    let map = cluster_topics(e);
    let n_topics = e.synth.truth.topics.len();
    let rhos: Vec<f64> = (0..n_topics)
        .map(|t| {
            let recovered: Vec<f64> = e
                .zone_profiles
                .iter()
                .map(|p| (0..map.len()).filter(|&c| map[c] == t).map(|c| p.probs[c]).sum())
                .collect();
            let planted: Vec<f64> = e.zone_profiles.iter().map(|p| e.synth.truth.zone_topic_expected[&p.location_id][t]).collect();
            spearman(&recovered, &planted).unwrap_or(0.0)
        })
        .collect();
    let mean = rhos.iter().sum::<f64>() / rhos.len() as f64;
    verdict(
        8,
        e.macro_f1 >= 0.90 && mean >= 0.8 && e.elapsed < Duration::from_secs(300),
        format!(
            "{} clusters, pair Macro-F1 {:.4} (≥ 0.90), mean zone ρ {mean:.3} (≥ 0.8), single-threaded run {:?} (< 5 min)",
            e.model.n_clusters(),
            e.macro_f1,
            e.elapsed
        ),
    );
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_09_crime_topic_ranks_first() {
    let e = &*E2E;
    let map = cluster_topics(e);
    let stat: BTreeMap<String, Option<f64>> =
        e.synth.truth.crime_rate.iter().map(|(z, v)| (z.clone(), v.map(f64::from))).collect();
    let report = spearman_per_cluster(&e.zone_profiles, &stat).unwrap();
    let ranked = report.ranked();
    let top = ranked[0];
    verdict(
        9,
        map[top.cluster] == e.synth.truth.crime_topic,
        format!(
            "top cluster {} (planted topic {}) ρ = {:.3} over {} zones, {} suppressed; crime topic is {}",
            top.cluster,
            map[top.cluster],
            top.rho.unwrap(),
            report.n_zones,
            report.n_suppressed,
            e.synth.truth.crime_topic
        ),
    );
}

// ---------------------------------------------------------------- 10

#[test]
fn criterion_10_grid_harness() {
    let spec = SynthSpec { n_articles: 300, n_topics: 4, n_republished: 0, n_annotation_pairs: 200, seed: 10, ..Default::default() };
    let synth = generate(&spec).unwrap();
    let (gazetteer, _) = build_gazetteer(synth.gazetteer.clone());
    let geoparser = Geoparser::new(gazetteer, ZoneIndex::new(synth.zones.clone()));
    let prepared = prepare(synth.articles.clone(), &geoparser, &Blocklist::default(), 40, &Preprocessor::default());
    let mut base = desk_params(10);
    base.umap.n_epochs = 200;
    base.hdbscan.min_cluster_size = 15;
    let grid = GridSpec { vocab_sizes: vec![30, 2000], umap_dims: vec![2, 5], umap_neighbors: vec![10, 15] };
    let run = || grid_search(&prepared.docs, &synth.annotations, &grid, &base, OutlierPolicy::TreatAsCluster);
    let first = run();
    let second = run();
    let mut csv = Vec::new();
    write_grid_csv(&first, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let header_ok = csv.lines().next() == Some("macro_f1,n_clusters,d,n_neighbors,vocab,error");
    let sorted = first.windows(2).all(|w| w[0].macro_f1.unwrap_or(-1.0) >= w[1].macro_f1.unwrap_or(-1.0));
    let completed = first.iter().filter(|r| r.error.is_none()).count();
    verdict(
        10,
        first.len() == 8 && header_ok && sorted && first == second,
        format!(
            "{} rows ({completed} completed), header ok: {header_ok}, sorted: {sorted}, identical across runs: {}; best row {}",
            first.len(),
            first == second,
            csv.lines().nth(1).unwrap_or("")
        ),
    );
}

// ---------------------------------------------------------------- 11

#[test]
fn criterion_11_metric_unit_values() {
    let f1 = macro_f1(&PairConfusion { tp: 2, fp: 1, fn_: 1, tn: 6 }).unwrap().score;
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let same = spearman(&x, &x);
    let reversed = spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]);
    let derived = spearman(&x, &[2.0, 1.0, 4.0, 3.0, 5.0]);
    let oracle = rank_formula(&x, &[2.0, 1.0, 4.0, 3.0, 5.0]);
    verdict(
        11,
        (f1 - 16.0 / 21.0).abs() <= 1e-12 && same == Some(1.0) && reversed == Some(-1.0) && derived == Some(0.8) && oracle == 0.8,
        format!("macro_f1(2,1,1,6) = {f1:.15} (16/21), Spearman {same:?} / {reversed:?} / {derived:?} (rank formula {oracle})"),
    );
}

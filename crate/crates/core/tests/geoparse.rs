mod common;

use std::collections::HashMap;

use common::*;
use newsloc::corpus::Article;
use newsloc::geoparse::{
    build_gazetteer, find_mentions, DataZone, point_in_ring, resolve, Geoparser, GazetteerRecord, PlaceKind, TextField, ZoneIndex,
};
use newsloc::synthgen::{generate, SynthSpec, CITY_NAME};
use once_cell::sync::Lazy;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Great-circle distance from the angle between unit vectors.
fn arc_m(a: (f64, f64), b: (f64, f64)) -> f64 {
    let v = |(lat, lon): (f64, f64)| {
        let (la, lo) = (lat.to_radians(), lon.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let (p, q) = (v(a), v(b));
    let cross = [p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0]];
    let sin = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
    let cos = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    6_371_000.0 * sin.atan2(cos)
}

fn record(id: &str, name: &str, lat: f64, lon: f64, district: &str) -> GazetteerRecord {
    GazetteerRecord {
        id: id.into(),
        name: name.into(),
        lat,
        lon,
        postcode_district: district.into(),
        kind: Some(PlaceKind::Street),
        priority: None,
    }
}

#[test]
fn ambiguous_name_resolves_to_nearest_context() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..200 {
        let anchors: Vec<(f64, f64)> =
            (0..rng.random_range(1..4)).map(|_| (rng.random_range(55.8..56.0), rng.random_range(-3.4..-3.0))).collect();
        let candidates: Vec<(f64, f64)> =
            (0..rng.random_range(2..5)).map(|_| (rng.random_range(55.8..56.0), rng.random_range(-3.4..-3.0))).collect();
        let mut records: Vec<GazetteerRecord> = anchors
            .iter()
            .enumerate()
            .map(|(i, &(lat, lon))| record(&format!("A{i}"), &format!("Anchor{i} Road"), lat, lon, "EH1"))
            .collect();
        for (i, &(lat, lon)) in candidates.iter().enumerate() {
            records.push(record(&format!("C{i}"), "Mill Lane", lat, lon, &format!("EH{}", 10 + i)));
        }
        let (gaz, _) = build_gazetteer(records);
        let body = (0..anchors.len()).map(|i| format!("Anchor{i} Road")).collect::<Vec<_>>().join(" and ") + " near Mill Lane.";
        let article = Article::new("x", "t", body, date(), vec![]);
        let mut mentions = find_mentions(&article, &gaz);
        resolve(&mut mentions, &gaz);

        let cost = |c: (f64, f64)| anchors.iter().map(|&a| arc_m(c, a)).sum::<f64>();
        let best = (0..candidates.len()).min_by(|&a, &b| cost(candidates[a]).total_cmp(&cost(candidates[b]))).unwrap();
        let mill = mentions.iter().find(|m| m.surface == "Mill Lane").unwrap();
        let got: usize = mill.resolved.as_ref().unwrap()[1..].parse().unwrap();
        assert!(
            got == best || (cost(candidates[got]) - cost(candidates[best])).abs() < 1e-6,
            "trial {trial}: picked C{got}, oracle C{best}"
        );
    }
}

#[test]
fn synthetic_mentions_found_with_exact_spans() {
    let spec = SynthSpec { n_articles: 300, seed: 5, ..Default::default() };
    let synth = generate(&spec).unwrap();
    let (gaz, rejected) = build_gazetteer(synth.gazetteer.clone());
    assert!(rejected.is_empty());
    let parser = Geoparser::new(gaz, ZoneIndex::new(synth.zones.clone()));
    let found: HashMap<String, _> = parser.process_all(&synth.articles).into_iter().map(|m| (m.article_id.clone(), m)).collect();
    for planted in &synth.truth.mentions {
        let article = &found[&planted.article_id];
        let hit = article
            .mentions
            .iter()
            .find(|m| m.field == planted.field && m.start == planted.start && m.end == planted.end)
            .unwrap_or_else(|| panic!("missed {planted:?}"));
        assert_eq!(hit.resolved.as_deref(), Some(planted.gazetteer_id.as_str()));
        if planted.surface != CITY_NAME {
            assert_eq!(hit.zone, planted.zone);
        }
        let text = if planted.field == TextField::Title {
            &synth.articles.iter().find(|a| a.id == planted.article_id).unwrap().title
        } else {
            &synth.articles.iter().find(|a| a.id == planted.article_id).unwrap().body
        };
        assert_eq!(&text[planted.start..planted.end], planted.surface);
    }
}

static ZONES: Lazy<(Vec<DataZone>, ZoneIndex)> = Lazy::new(|| {
    let spec = SynthSpec { n_articles: 10, n_republished: 0, n_annotation_pairs: 0, ..Default::default() };
    let zones = generate(&spec).unwrap().zones;
    (zones.clone(), ZoneIndex::new(zones))
});

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ray_casting_matches_winding_number(seed in 0u64..10_000, vertices in 3usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = random_polygon(&mut rng, (0.0, 0.0), vertices);
        for _ in 0..50 {
            let p = (rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
            if let Some(inside) = point_in_ring(p, &ring) {
                prop_assert_eq!(inside, winding_number(p, &ring) != 0);
            }
        }
    }

    #[test]
    fn zone_assignment_matches_winding_oracle(lat in 55.90f64..55.96, lon in -3.24f64..-3.16) {
        let (zones, index) = &*ZONES;
        let expected = zones
            .iter()
            .filter(|z| winding_number((lat, lon), &z.polygon) != 0)
            .map(|z| z.id.as_str())
            .min();
        prop_assert_eq!(index.assign((lat, lon)), expected);
    }

    #[test]
    fn vertex_on_ring_is_boundary(seed in 0u64..10_000, vertices in 3usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = random_polygon(&mut rng, (0.0, 0.0), vertices);
        let i = rng.random_range(0..ring.len() - 1);
        prop_assert_eq!(point_in_ring(ring[i], &ring), None);
    }
}

#[test]
fn haversine_agrees_with_vector_arc() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let a = (rng.random_range(-80.0..80.0), rng.random_range(-179.0..179.0));
        let b = (rng.random_range(-80.0..80.0), rng.random_range(-179.0..179.0));
        let h = newsloc::geoparse::haversine_m(a, b);
        assert!((h - arc_m(a, b)).abs() <= 1e-6 * h.max(1.0), "{a:?} {b:?}");
    }
}

use std::collections::HashMap;

use super::gazetteer::{normalize_name, Gazetteer, GazetteerEntry};
use super::geo::haversine_m;
use super::mentions::LocationMention;

/// Sum of great-circle distances from `point` to every anchor point.
pub fn context_cost(point: (f64, f64), anchors: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    anchors.into_iter().map(|a| haversine_m(point, a)).sum()
}

/// Resolves mentions to gazetteer entries in whole-article context.
///
/// Every distinct surface starts at its priority-best candidate. Then, in
/// order of first appearance, each ambiguous surface moves to the candidate
/// minimising the summed distance to the current choices of all other
/// surfaces (a single coordinate-descent sweep). All occurrences of a surface
/// share one resolution. Returns the surfaces that had no candidate.
pub fn resolve(mentions: &mut [LocationMention], gazetteer: &Gazetteer) -> Vec<String> {
    let mut order: Vec<String> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    for m in mentions.iter() {
        let key = normalize_name(&m.surface);
        if !slot.contains_key(&key) {
            slot.insert(key.clone(), order.len());
            order.push(key);
        }
    }

    let candidates: Vec<Vec<&GazetteerEntry>> =
        order.iter().map(|k| gazetteer.candidates(k)).collect();
    // Candidates are sorted by (priority, id), so index 0 is priority-best.
    let mut choice: Vec<Option<usize>> = candidates
        .iter()
        .map(|c| (!c.is_empty()).then_some(0))
        .collect();

    for s in 0..order.len() {
        if candidates[s].len() < 2 {
            continue;
        }
        let anchors: Vec<(f64, f64)> = (0..order.len())
            .filter(|&o| o != s)
            .filter_map(|o| choice[o].map(|c| candidates[o][c].point()))
            .collect();
        if anchors.is_empty() {
            continue;
        }
        let mut best = 0;
        let mut best_cost = f64::INFINITY;
        for (ci, cand) in candidates[s].iter().enumerate() {
            let cost = context_cost(cand.point(), anchors.iter().copied());
            if cost < best_cost {
                best = ci;
                best_cost = cost;
            }
        }
        choice[s] = Some(best);
    }

    for m in mentions.iter_mut() {
        let s = slot[&normalize_name(&m.surface)];
        m.resolved = choice[s].map(|c| candidates[s][c].id.clone());
        m.zone = None;
    }
    order
        .into_iter()
        .zip(choice)
        .filter_map(|(k, c)| c.is_none().then_some(k))
        .collect()
}

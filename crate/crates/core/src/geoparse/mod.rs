//! Place-name detection, toponym resolution and data-zone mapping.
//!
//! Mentions are found by case-insensitive longest match against a local
//! gazetteer, resolved per article by minimising the total great-circle
//! distance between the chosen points, and mapped to the data zone whose
//! polygon contains them.

mod gazetteer;
mod geo;
mod mentions;
mod resolve;
mod zones;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::preprocess::Blocklist;

pub use gazetteer::{
    build_gazetteer, load_gazetteer_records, normalize_name, read_gazetteer_records,
    write_gazetteer_csv, Gazetteer, GazetteerEntry, GazetteerRecord, PlaceKind, Rejection,
};
pub use geo::{haversine_m, BoundingBox, EARTH_RADIUS_M};
pub use mentions::{find_mentions, word_tokens, LocationMention, TextField};
pub use resolve::{context_cost, resolve};
pub use zones::{
    assign_data_zone, base_name, load_zones, point_in_ring, read_zones, rollup_neighbourhoods,
    write_zones_geojson, DataZone, Neighbourhood, ZoneIndex,
};

/// Mentions of one article after detection, resolution and zone mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleMentions {
    pub article_id: String,
    pub mentions: Vec<LocationMention>,
    /// Surfaces without any gazetteer candidate.
    #[serde(default)]
    pub unresolved: Vec<String>,
}

impl ArticleMentions {
    /// Distinct normalised surfaces of resolved mentions, ignoring broad ones.
    pub fn distinct_resolved_surfaces(&self, blocklist: &Blocklist) -> Vec<String> {
        let mut out: Vec<String> = self
            .mentions
            .iter()
            .filter(|m| m.resolved.is_some() && !blocklist.contains(&m.surface))
            .map(|m| normalize_name(&m.surface))
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Gazetteer and zones bundled for per-article processing.
#[derive(Debug, Clone)]
pub struct Geoparser {
    pub gazetteer: Gazetteer,
    pub zones: ZoneIndex,
}

impl Geoparser {
    pub fn new(gazetteer: Gazetteer, zones: ZoneIndex) -> Self {
        Self { gazetteer, zones }
    }

    /// Detects, resolves and zone-maps the mentions of one article.
    pub fn process(&self, article: &Article) -> ArticleMentions {
        let mut mentions = find_mentions(article, &self.gazetteer);
        let unresolved = resolve(&mut mentions, &self.gazetteer);
        for m in &mut mentions {
            if let Some(entry) = m.resolved.as_deref().and_then(|id| self.gazetteer.get(id)) {
                m.zone = self.zones.assign((entry.lat, entry.lon)).map(String::from);
            }
        }
        ArticleMentions {
            article_id: article.id.clone(),
            mentions,
            unresolved,
        }
    }

    pub fn process_all(&self, articles: &[Article]) -> Vec<ArticleMentions> {
        crate::par::map_slice(articles, |a| self.process(a))
    }
}

/// Number of resolved, non-broad mentions per data zone.
pub fn zone_mention_counts(
    mentions: &[LocationMention],
    blocklist: &Blocklist,
) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for m in mentions {
        if m.resolved.is_none() || blocklist.contains(&m.surface) {
            continue;
        }
        if let Some(zone) = &m.zone {
            *counts.entry(zone.clone()).or_insert(0) += 1;
        }
    }
    counts
}

//! Per-location topic distributions built from article memberships.
//!
//! A location's profile is the plain mean of the membership vectors of the
//! articles that mention it at least once. Neighbourhoods pool the article
//! sets of their zones before averaging. The noise slot is carried through.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cluster::{ArticleMembership, ClusterHierarchy};
use crate::geoparse::{ArticleMentions, Neighbourhood};
use crate::preprocess::Blocklist;
use crate::{par, Error, Result};

/// Location id to the set of articles mentioning it.
pub type MentionIndex = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationProfile {
    pub location_id: String,
    /// Sorted, distinct.
    pub article_ids: Vec<String>,
    /// Cluster masses followed by noise.
    pub probs: Vec<f64>,
}

impl LocationProfile {
    pub fn n_clusters(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn noise(&self) -> f64 {
        self.probs[self.probs.len() - 1]
    }
}

/// Zone id to articles with at least one resolved, non-blocklisted mention
/// inside that zone.
pub fn zone_mention_index(mentions: &[ArticleMentions], blocklist: &Blocklist) -> MentionIndex {
    let mut index = MentionIndex::new();
    for am in mentions {
        for m in &am.mentions {
            if blocklist.contains(&m.surface) {
                continue;
            }
            if let Some(zone) = &m.zone {
                index.entry(zone.clone()).or_default().insert(am.article_id.clone());
            }
        }
    }
    index
}

/// Neighbourhood name to the union of its zones' article sets.
pub fn neighbourhood_mention_index(zone_index: &MentionIndex, neighbourhoods: &[Neighbourhood]) -> MentionIndex {
    neighbourhoods
        .iter()
        .map(|n| {
            let set = n
                .zone_ids
                .iter()
                .filter_map(|z| zone_index.get(z))
                .flatten()
                .cloned()
                .collect();
            (n.name.clone(), set)
        })
        .collect()
}

struct Lookup<'a>(HashMap<&'a str, &'a ArticleMembership>);

impl<'a> Lookup<'a> {
    fn new(memberships: &'a [ArticleMembership]) -> Self {
        Self(memberships.iter().map(|m| (m.article_id.as_str(), m)).collect())
    }

    fn profile(&self, location: &str, articles: &BTreeSet<String>) -> Result<Option<LocationProfile>> {
        let mut sum: Option<Vec<f64>> = None;
        for id in articles {
            let m = self.0.get(id.as_str()).ok_or_else(|| Error::MissingLabel(id.clone()))?;
            match &mut sum {
                None => sum = Some(m.probs.clone()),
                Some(s) if s.len() == m.probs.len() => {
                    s.iter_mut().zip(&m.probs).for_each(|(a, b)| *a += b);
                }
                Some(_) => {
                    return Err(Error::Invalid(format!("membership of {id} has the wrong length")));
                }
            }
        }
        let Some(mut probs) = sum else {
            log::info!("no articles mention {location}; profile skipped");
            return Ok(None);
        };
        let n = articles.len() as f64;
        probs.iter_mut().for_each(|p| *p /= n);
        Ok(Some(LocationProfile {
            location_id: location.to_string(),
            article_ids: articles.iter().cloned().collect(),
            probs,
        }))
    }
}

/// Mean membership over the articles mentioning `location`. `None` when no
/// article does.
pub fn location_profile(
    location: &str,
    index: &MentionIndex,
    memberships: &[ArticleMembership],
) -> Result<Option<LocationProfile>> {
    let empty = BTreeSet::new();
    Lookup::new(memberships).profile(location, index.get(location).unwrap_or(&empty))
}

/// Profile over the union of the neighbourhood's zone article sets.
pub fn neighbourhood_profile(
    neighbourhood: &Neighbourhood,
    zone_index: &MentionIndex,
    memberships: &[ArticleMembership],
) -> Result<Option<LocationProfile>> {
    let index = neighbourhood_mention_index(zone_index, std::slice::from_ref(neighbourhood));
    location_profile(&neighbourhood.name, &index, memberships)
}

/// Profiles for every location in the index, in index order. Locations with
/// no articles are returned separately.
pub fn all_profiles(
    index: &MentionIndex,
    memberships: &[ArticleMembership],
) -> Result<(Vec<LocationProfile>, Vec<String>)> {
    let lookup = Lookup::new(memberships);
    let entries: Vec<(&String, &BTreeSet<String>)> = index.iter().collect();
    let results = par::map_slice(&entries, |(loc, arts)| lookup.profile(loc, arts));
    let mut profiles = Vec::new();
    let mut empty = Vec::new();
    for ((loc, _), r) in entries.into_iter().zip(results) {
        match r? {
            Some(p) => profiles.push(p),
            None => empty.push(loc.clone()),
        }
    }
    Ok((profiles, empty))
}

/// Named groups of cluster ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThemeMap(pub BTreeMap<String, BTreeSet<usize>>);

impl ThemeMap {
    /// Checks that themes are disjoint and only name existing clusters.
    pub fn validate(&self, n_clusters: usize) -> Result<()> {
        let mut seen = BTreeMap::new();
        for (theme, ids) in &self.0 {
            if theme == OTHER_THEME || theme == NOISE_THEME {
                return Err(Error::Invalid(format!("theme name {theme:?} is reserved")));
            }
            for &id in ids {
                if id >= n_clusters {
                    return Err(Error::UnknownCluster(id));
                }
                if let Some(prev) = seen.insert(id, theme) {
                    return Err(Error::Invalid(format!("cluster {id} is in both {prev:?} and {theme:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn theme_of(&self, cluster: usize) -> Option<&str> {
        self.0
            .iter()
            .find(|(_, ids)| ids.contains(&cluster))
            .map(|(t, _)| t.as_str())
    }

    /// One theme per top-level branch of the cluster hierarchy.
    pub fn suggest(hierarchy: &ClusterHierarchy) -> Self {
        Self(
            hierarchy
                .branches()
                .into_iter()
                .enumerate()
                .map(|(i, ids)| (format!("theme_{i:02}"), ids.into_iter().collect()))
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub const OTHER_THEME: &str = "other";
pub const NOISE_THEME: &str = "noise";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeDistribution {
    pub themes: BTreeMap<String, f64>,
    pub other: f64,
    pub noise: f64,
}

pub fn theme_profile(profile: &LocationProfile, themes: &ThemeMap) -> ThemeDistribution {
    let mut out = ThemeDistribution {
        themes: themes.0.keys().map(|t| (t.clone(), 0.0)).collect(),
        other: 0.0,
        noise: profile.noise(),
    };
    for (c, &p) in profile.probs[..profile.n_clusters()].iter().enumerate() {
        match themes.theme_of(c) {
            Some(t) => *out.themes.get_mut(t).expect("theme listed") += p,
            None => out.other += p,
        }
    }
    out
}

pub fn write_profiles_csv<W: Write>(profiles: &[LocationProfile], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["location", "cluster", "prob"])?;
    for p in profiles {
        for (c, prob) in p.probs.iter().enumerate() {
            let cluster = if c == p.n_clusters() { NOISE_THEME.to_string() } else { c.to_string() };
            w.write_record([p.location_id.as_str(), &cluster, &prob.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("profiles csv", e))?;
    Ok(())
}

/// Location to probability vector (noise last) from a profiles CSV.
pub fn read_profiles_csv<R: Read>(input: R) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut r = csv::Reader::from_reader(input);
    let mut clusters: BTreeMap<String, (BTreeMap<usize, f64>, Option<f64>)> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |reason: &str| Error::Record { index: i + 2, reason: reason.to_string() };
        let (loc, cluster, prob) = match (rec.get(0), rec.get(1), rec.get(2)) {
            (Some(l), Some(c), Some(p)) => (l, c, p),
            _ => return Err(bad("expected location,cluster,prob")),
        };
        let prob: f64 = prob.parse().map_err(|_| bad("prob is not a number"))?;
        let entry = clusters.entry(loc.to_string()).or_default();
        if cluster == NOISE_THEME {
            entry.1 = Some(prob);
        } else {
            let c: usize = cluster.parse().map_err(|_| bad("cluster is not an id"))?;
            entry.0.insert(c, prob);
        }
    }
    clusters
        .into_iter()
        .map(|(loc, (cs, noise))| {
            let n = cs.keys().next_back().map_or(0, |m| m + 1);
            if cs.len() != n {
                return Err(Error::Invalid(format!("{loc}: cluster ids are not contiguous")));
            }
            let noise = noise.ok_or_else(|| Error::Invalid(format!("{loc}: no noise row")))?;
            Ok((loc, cs.into_values().chain([noise]).collect()))
        })
        .collect()
}

/// Profiles nested by theme: `{location: {n_articles, themes: {name: {mass,
/// clusters}}, other: {mass, clusters}, noise}}`.
pub fn profiles_json(profiles: &[LocationProfile], themes: &ThemeMap) -> Value {
    let mut root = Map::new();
    for p in profiles {
        let dist = theme_profile(p, themes);
        let mut by_theme: BTreeMap<String, Map<String, Value>> = BTreeMap::new();
        let mut other = Map::new();
        for (c, &prob) in p.probs[..p.n_clusters()].iter().enumerate() {
            match themes.theme_of(c) {
                Some(t) => {
                    by_theme.entry(t.to_string()).or_default().insert(c.to_string(), json!(prob));
                }
                None => {
                    other.insert(c.to_string(), json!(prob));
                }
            }
        }
        let theme_obj: Map<String, Value> = dist
            .themes
            .iter()
            .map(|(t, mass)| {
                let clusters = by_theme.remove(t).unwrap_or_default();
                (t.clone(), json!({ "mass": mass, "clusters": clusters }))
            })
            .collect();
        root.insert(
            p.location_id.clone(),
            json!({
                "n_articles": p.article_ids.len(),
                "themes": theme_obj,
                "other": { "mass": dist.other, "clusters": other },
                "noise": dist.noise,
            }),
        );
    }
    Value::Object(root)
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#bcbd22",
    "#17becf", "#7f7f7f",
];
const NOISE_COLOUR: &str = "#cccccc";

/// Pie chart of a profile by theme, with noise as its own grey wedge.
pub fn profile_pie_svg(profile: &LocationProfile, themes: &ThemeMap) -> String {
    let dist = theme_profile(profile, themes);
    let mut wedges: Vec<(String, f64, &str)> = dist
        .themes
        .iter()
        .enumerate()
        .map(|(i, (t, &m))| (t.clone(), m, PALETTE[i % PALETTE.len()]))
        .collect();
    wedges.push((OTHER_THEME.into(), dist.other, PALETTE[PALETTE.len() - 1]));
    wedges.push((NOISE_THEME.into(), dist.noise, NOISE_COLOUR));

    let (cx, cy, r) = (100.0, 100.0, 90.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"200\" height=\"230\" viewBox=\"0 0 200 230\">"
    );
    let _ = writeln!(s, "  <title>{}</title>", xml_escape(&profile.location_id));
    let mut angle: f64 = 0.0;
    for (name, mass, colour) in wedges.iter().filter(|w| w.1 > 0.0) {
        let label = format!("{}: {:.1}%", xml_escape(name), mass * 100.0);
        if *mass >= 1.0 - 1e-12 {
            let _ = writeln!(s, "  <circle cx=\"{cx}\" cy=\"{cy}\" r=\"{r}\" fill=\"{colour}\"><title>{label}</title></circle>");
            continue;
        }
        let start = angle;
        angle += mass * std::f64::consts::TAU;
        let (x0, y0) = (cx + r * start.sin(), cy - r * start.cos());
        let (x1, y1) = (cx + r * angle.sin(), cy - r * angle.cos());
        let large = u8::from(*mass > 0.5);
        let _ = writeln!(
            s,
            "  <path d=\"M{cx},{cy} L{x0:.3},{y0:.3} A{r},{r} 0 {large} 1 {x1:.3},{y1:.3} Z\" fill=\"{colour}\"><title>{label}</title></path>"
        );
    }
    let _ = writeln!(
        s,
        "  <text x=\"100\" y=\"220\" text-anchor=\"middle\" font-size=\"12\">{} (n={})</text>",
        xml_escape(&profile.location_id),
        profile.article_ids.len()
    );
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geo::BoundingBox;
use super::mentions::word_tokens;
use crate::{Error, Result};

/// Kind of place; the declaration order is the default priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceKind {
    Settlement,
    Street,
    Building,
    Park,
    Other,
}

impl PlaceKind {
    pub fn default_priority(self) -> u8 {
        self as u8
    }
}

/// One row of the gazetteer CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerRecord {
    pub id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub postcode_district: String,
    #[serde(default)]
    pub kind: Option<PlaceKind>,
    #[serde(default)]
    pub priority: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub postcode_district: String,
    pub kind: PlaceKind,
    /// Lower is preferred.
    pub priority: u8,
}

impl GazetteerEntry {
    pub fn point(&self) -> (f64, f64) {
        (self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub id: String,
    pub reason: String,
}

/// Case-insensitive key of a place name: its word tokens, lowercased and
/// joined by single spaces.
pub fn normalize_name(name: &str) -> String {
    word_tokens(name)
        .into_iter()
        .map(|(_, t)| t)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Immutable gazetteer indexed by normalised token sequence.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    by_id: HashMap<String, usize>,
    by_name: HashMap<String, Vec<usize>>,
    max_tokens: usize,
    bbox: Option<BoundingBox>,
}

impl Gazetteer {
    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&GazetteerEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    /// Candidate entries for a normalised name, ordered by (priority, id).
    pub fn candidates(&self, normalized: &str) -> Vec<&GazetteerEntry> {
        self.by_name
            .get(normalized)
            .map(|ix| ix.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    pub fn contains_name(&self, normalized: &str) -> bool {
        self.by_name.contains_key(normalized)
    }

    /// Longest name in tokens.
    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        self.bbox
    }
}

fn validate(r: &GazetteerRecord) -> std::result::Result<(), String> {
    if !(r.lat.is_finite() && (-90.0..=90.0).contains(&r.lat)) {
        return Err(format!("latitude {} outside [-90, 90]", r.lat));
    }
    if !(r.lon.is_finite() && (-180.0..=180.0).contains(&r.lon)) {
        return Err(format!("longitude {} outside [-180, 180]", r.lon));
    }
    if normalize_name(&r.name).is_empty() {
        return Err("name has no word characters".into());
    }
    Ok(())
}

/// Builds the gazetteer, keeping one entry per (normalised name, postcode
/// district): the one with the lowest priority value, then the lowest id.
/// Records with invalid coordinates or empty names are returned as rejections.
pub fn build_gazetteer(records: Vec<GazetteerRecord>) -> (Gazetteer, Vec<Rejection>) {
    let mut rejected = Vec::new();
    let mut best: BTreeMap<(String, String), GazetteerEntry> = BTreeMap::new();
    for r in records {
        if let Err(reason) = validate(&r) {
            rejected.push(Rejection { id: r.id, reason });
            continue;
        }
        let kind = r.kind.unwrap_or(PlaceKind::Other);
        let entry = GazetteerEntry {
            priority: r.priority.unwrap_or_else(|| kind.default_priority()),
            id: r.id,
            name: r.name,
            lat: r.lat,
            lon: r.lon,
            postcode_district: r.postcode_district,
            kind,
        };
        let key = (normalize_name(&entry.name), entry.postcode_district.clone());
        match best.get(&key) {
            Some(cur) if (cur.priority, &cur.id) <= (entry.priority, &entry.id) => {}
            _ => {
                best.insert(key, entry);
            }
        }
    }

    let mut entries: Vec<GazetteerEntry> = best.into_values().collect();
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    let mut by_id = HashMap::new();
    let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
    let mut max_tokens = 0;
    for (i, e) in entries.iter().enumerate() {
        let key = normalize_name(&e.name);
        max_tokens = max_tokens.max(key.split(' ').count());
        by_name.entry(key).or_default().push(i);
        by_id.insert(e.id.clone(), i);
    }
    for ix in by_name.values_mut() {
        ix.sort_by(|&a, &b| {
            (entries[a].priority, &entries[a].id).cmp(&(entries[b].priority, &entries[b].id))
        });
    }
    let bbox = BoundingBox::around(entries.iter().map(GazetteerEntry::point));
    let gazetteer = Gazetteer {
        entries,
        by_id,
        by_name,
        max_tokens,
        bbox,
    };
    (gazetteer, rejected)
}

/// Reads gazetteer CSV rows (`id,name,lat,lon,postcode_district,kind,priority`).
pub fn read_gazetteer_records(text: &str) -> Result<Vec<GazetteerRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Record {
                index: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn load_gazetteer_records(path: impl AsRef<Path>) -> Result<Vec<GazetteerRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_gazetteer_records(&text)
}

pub fn write_gazetteer_csv<W: std::io::Write>(records: &[GazetteerRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<gazetteer csv>", e))?;
    Ok(())
}

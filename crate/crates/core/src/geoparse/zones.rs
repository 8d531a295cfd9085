use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geo::BoundingBox;
use crate::{Error, Result};

/// Polygonal statistical zone. Vertices are `(lat, lon)` and the ring is
/// closed (first vertex equals last).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataZone {
    pub id: String,
    pub name: String,
    pub polygon: Vec<(f64, f64)>,
    /// Crimes per 10,000 population; `None` when suppressed.
    pub crime_rate: Option<u32>,
}

impl DataZone {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        polygon: Vec<(f64, f64)>,
        crime_rate: Option<u32>,
    ) -> Result<Self> {
        let zone = Self {
            id: id.into(),
            name: name.into(),
            polygon,
            crime_rate,
        };
        zone.validate()?;
        Ok(zone)
    }

    fn validate(&self) -> Result<()> {
        let err = |reason: &str| Error::Zone {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.polygon.len() < 4 {
            return Err(err("ring needs at least 4 vertices"));
        }
        if self.polygon.first() != self.polygon.last() {
            return Err(err("ring is not closed"));
        }
        if self
            .polygon
            .iter()
            .any(|&(lat, lon)| !lat.is_finite() || !lon.is_finite())
        {
            return Err(err("non-finite vertex"));
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::around(self.polygon.iter().copied()).expect("validated ring is non-empty")
    }
}

/// Union of zones sharing a base name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighbourhood {
    pub name: String,
    pub zone_ids: Vec<String>,
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let (ax, ay) = (a.1, a.0);
    let (bx, by) = (b.1, b.0);
    let (px, py) = (p.1, p.0);
    if px < ax.min(bx) || px > ax.max(bx) || py < ay.min(by) || py > ay.max(by) {
        return false;
    }
    let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    let scale = ((bx - ax).hypot(by - ay)) * ((px - ax).hypot(py - ay));
    cross.abs() <= 1e-12 * scale
}

/// Even-odd ray casting. Returns `Some(true)` inside, `Some(false)` outside
/// and `None` when the point lies on the ring.
pub fn point_in_ring(point: (f64, f64), ring: &[(f64, f64)]) -> Option<bool> {
    let (py, px) = point;
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if on_segment(point, a, b) {
            return None;
        }
        let (ay, ax) = a;
        let (by, bx) = b;
        if (ay > py) != (by > py) {
            let x_cross = ax + (py - ay) * (bx - ax) / (by - ay);
            if px < x_cross {
                inside = !inside;
            }
        }
    }
    Some(inside)
}

/// Zones sorted by id with bounding boxes for a cheap prefilter.
#[derive(Debug, Clone, Default)]
pub struct ZoneIndex {
    zones: Vec<DataZone>,
    boxes: Vec<BoundingBox>,
}

impl ZoneIndex {
    pub fn new(mut zones: Vec<DataZone>) -> Self {
        zones.sort_by(|a, b| a.id.cmp(&b.id));
        let boxes = zones.iter().map(DataZone::bounding_box).collect();
        Self { zones, boxes }
    }

    pub fn zones(&self) -> &[DataZone] {
        &self.zones
    }

    pub fn get(&self, id: &str) -> Option<&DataZone> {
        self.zones
            .binary_search_by(|z| z.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.zones[i])
    }

    /// Zone containing `point`; boundary points go to the smallest touching
    /// zone id.
    pub fn assign(&self, point: (f64, f64)) -> Option<&str> {
        self.zones
            .iter()
            .zip(&self.boxes)
            .filter(|(_, bb)| bb.contains(point))
            .find(|(z, _)| point_in_ring(point, &z.polygon) != Some(false))
            .map(|(z, _)| z.id.as_str())
    }
}

/// Maps a `(lat, lon)` point to a zone id. See [`ZoneIndex::assign`].
pub fn assign_data_zone(point: (f64, f64), zones: &ZoneIndex) -> Option<&str> {
    zones.assign(point)
}

/// Strips a trailing `" - <digits>"` suffix: `"Oxgangs - 01"` → `"Oxgangs"`.
pub fn base_name(name: &str) -> &str {
    match name.rsplit_once(" - ") {
        Some((base, suffix))
            if !suffix.is_empty() && suffix.chars().all(|c| c.is_ascii_digit()) =>
        {
            base
        }
        _ => name,
    }
}

/// Groups zones into neighbourhoods by base name, sorted by name.
pub fn rollup_neighbourhoods(zones: &[DataZone]) -> Vec<Neighbourhood> {
    let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for z in zones {
        groups.entry(base_name(&z.name)).or_default().push(z.id.clone());
    }
    groups
        .into_iter()
        .map(|(name, mut zone_ids)| {
            zone_ids.sort();
            Neighbourhood {
                name: name.to_string(),
                zone_ids,
            }
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct FeatureCollection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<Feature>,
}

#[derive(Serialize, Deserialize)]
struct Feature {
    #[serde(rename = "type")]
    kind: String,
    geometry: Geometry,
    properties: ZoneProperties,
}

#[derive(Serialize, Deserialize)]
struct Geometry {
    #[serde(rename = "type")]
    kind: String,
    coordinates: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct ZoneProperties {
    #[serde(deserialize_with = "string_or_number")]
    id: String,
    name: String,
    #[serde(default)]
    crime_rate: Option<u32>,
}

fn string_or_number<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!("invalid zone id {other}"))),
    }
}

/// Parses a GeoJSON FeatureCollection of Polygons. Coordinates are GeoJSON
/// `[lon, lat]`; holes are not supported.
pub fn read_zones(text: &str) -> Result<Vec<DataZone>> {
    let fc: FeatureCollection = serde_json::from_str(text)?;
    if fc.kind != "FeatureCollection" {
        return Err(Error::Invalid(format!("expected FeatureCollection, got {}", fc.kind)));
    }
    fc.features
        .into_iter()
        .map(|f| {
            let id = f.properties.id;
            if f.geometry.kind != "Polygon" {
                return Err(Error::Zone {
                    id,
                    reason: format!("unsupported geometry {}", f.geometry.kind),
                });
            }
            let mut rings = f.geometry.coordinates.into_iter();
            let outer = rings.next().unwrap_or_default();
            if rings.next().is_some() {
                return Err(Error::Zone {
                    id,
                    reason: "polygons with holes are not supported".into(),
                });
            }
            let polygon = outer.into_iter().map(|[lon, lat]| (lat, lon)).collect();
            DataZone::new(id, f.properties.name, polygon, f.properties.crime_rate)
        })
        .collect()
}

pub fn load_zones(path: impl AsRef<Path>) -> Result<Vec<DataZone>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_zones(&text)
}

pub fn write_zones_geojson(zones: &[DataZone]) -> Result<String> {
    let fc = FeatureCollection {
        kind: "FeatureCollection".into(),
        features: zones
            .iter()
            .map(|z| Feature {
                kind: "Feature".into(),
                geometry: Geometry {
                    kind: "Polygon".into(),
                    coordinates: vec![z.polygon.iter().map(|&(lat, lon)| [lon, lat]).collect()],
                },
                properties: ZoneProperties {
                    id: z.id.clone(),
                    name: z.name.clone(),
                    crime_rate: z.crime_rate,
                },
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&fc)?)
}

//! Seeded synthetic corpora with planted topics and place mentions.
//!
//! Zones form a grid of rectangular cells; each grid row is one
//! neighbourhood whose zones are named `"<row name> - NN"`. Every topic has a
//! home cell and a Gaussian affinity over zones. Articles are allotted to
//! zones by quota from that affinity, so the realised zone mix tracks the
//! planted one closely. Words are invented so topic vocabularies are
//! disjoint by construction.
//!
//! Ground truth (`ground_truth.json`) holds:
//! - `topics`: id, name and core vocabulary of each topic
//! - `crime_topic`: the topic the synthetic crime rate follows
//! - `articles`: topic, zone and `duplicate_of` for every article
//! - `mentions`: every planted place mention with its byte span, gazetteer
//!   id and zone (`null` zone for the broad city name)
//! - `affinity`: topic × zone matrix, rows sum to 1
//! - `zone_topic_expected`: P(topic | zone) implied by the affinity
//! - `zone_topic_empirical`: P(topic | zone) from the generated originals
//! - `crime_rate`: per-zone statistic, `null` where suppressed

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::evaluate::{sample_annotation_pairs, write_annotations, AnnotatedPair, Stratum};
use crate::geoparse::{write_gazetteer_csv, write_zones_geojson, DataZone, GazetteerRecord, PlaceKind, TextField};
use crate::preprocess::FunctionWordLexicon;
use crate::{Error, Result};

const TOPIC_NAMES: [&str; 12] = [
    "crime", "transport", "schools", "arts", "sport", "business", "housing", "environment", "health",
    "politics", "food", "heritage",
];
const ROW_NAMES: [&str; 5] = ["Blockton North", "Blockton Mill", "Blockton Central", "Blockton Green", "Blockton South"];
const FUNCTION_WORDS: [&str; 20] = [
    "the", "a", "and", "of", "to", "with", "for", "on", "at", "by", "from", "but", "or", "this", "that", "it",
    "they", "also", "not", "into",
];
const PREPOSITIONS: [&str; 4] = ["near", "in", "at", "across"];
const SUFFIXES: [(&str, PlaceKind); 8] = [
    ("Road", PlaceKind::Street),
    ("Lane", PlaceKind::Street),
    ("Terrace", PlaceKind::Street),
    ("Crescent", PlaceKind::Street),
    ("Park", PlaceKind::Park),
    ("Gardens", PlaceKind::Park),
    ("Court", PlaceKind::Building),
    ("House", PlaceKind::Building),
];
const EXTRA_TAGS: [&str; 3] = ["news", "local", "community"];
pub const BOILERPLATE: &str =
    "Sign up to our newsletter for the latest stories from around the city every single morning.";
pub const CITY_NAME: &str = "Edinburgh";
pub const SHARED_STREET: &str = "High Street";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    /// Unique articles, before republished copies are added.
    pub n_articles: usize,
    pub n_topics: usize,
    pub core_vocab_per_topic: usize,
    pub filler_vocab: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Cell size in degrees.
    pub cell_dlat: f64,
    pub cell_dlon: f64,
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub places_per_zone: usize,
    pub sentences_per_article: (usize, usize),
    pub words_per_sentence: (usize, usize),
    /// Share of sentence words drawn from the topic's core vocabulary.
    pub core_fraction: f64,
    pub function_fraction: f64,
    /// Inclusive range of specific place mentions per article.
    pub mentions_per_article: (usize, usize),
    pub title_mention_rate: f64,
    pub shared_street_rate: f64,
    pub city_mention_rate: f64,
    /// Affinity bump width, in grid cells.
    pub affinity_width: f64,
    pub affinity_floor: f64,
    pub crime_topic: usize,
    pub suppressed_zones: usize,
    pub boilerplate_rate: f64,
    pub n_republished: usize,
    pub keyword_rate: f64,
    pub n_annotation_pairs: usize,
    pub annotation_bias: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_articles: 1000,
            n_topics: 8,
            core_vocab_per_topic: 40,
            filler_vocab: 150,
            grid_rows: 5,
            grid_cols: 5,
            cell_dlat: 0.005,
            cell_dlon: 0.009,
            origin_lat: 55.92,
            origin_lon: -3.22,
            places_per_zone: 4,
            sentences_per_article: (5, 8),
            words_per_sentence: (11, 14),
            core_fraction: 0.45,
            function_fraction: 0.2,
            mentions_per_article: (1, 3),
            title_mention_rate: 0.2,
            shared_street_rate: 0.3,
            city_mention_rate: 0.15,
            affinity_width: 1.5,
            affinity_floor: 0.02,
            crime_topic: 0,
            suppressed_zones: 2,
            boilerplate_rate: 0.3,
            n_republished: 20,
            keyword_rate: 0.7,
            n_annotation_pairs: 700,
            annotation_bias: 2.0,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Invalid(format!("synth spec: {m}")));
        let n_zones = self.grid_rows * self.grid_cols;
        if self.n_topics == 0 || self.n_topics > TOPIC_NAMES.len() {
            return fail(&format!("n_topics must be 1..={}", TOPIC_NAMES.len()));
        }
        if self.n_topics > n_zones {
            return fail("more topics than zones");
        }
        if self.grid_rows == 0 || self.grid_cols == 0 || self.grid_cols > 99 {
            return fail("grid must be non-empty with at most 99 columns");
        }
        if self.crime_topic >= self.n_topics {
            return fail("crime_topic out of range");
        }
        if self.suppressed_zones + 3 > n_zones {
            return fail("too many suppressed zones");
        }
        if self.places_per_zone == 0 || self.core_vocab_per_topic == 0 || self.filler_vocab == 0 {
            return fail("vocabularies and places must be non-empty");
        }
        if self.n_articles < 2 || self.n_republished > self.n_articles {
            return fail("need at least 2 articles and no more copies than articles");
        }
        let (s0, s1) = self.sentences_per_article;
        let (w0, w1) = self.words_per_sentence;
        let (m0, m1) = self.mentions_per_article;
        if s0 < 2 || s0 > s1 || w0 < 10 || w0 > w1 || m0 < 1 || m0 > m1 {
            return fail("ranges must be ordered, with at least 2 sentences, 10 words and 1 mention");
        }
        let rates = [
            self.core_fraction,
            self.function_fraction,
            self.title_mention_rate,
            self.shared_street_rate,
            self.city_mention_rate,
            self.boilerplate_rate,
            self.keyword_rate,
        ];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) || self.core_fraction + self.function_fraction > 1.0 {
            return fail("rates must lie in [0, 1]");
        }
        if !(self.affinity_width > 0.0 && self.affinity_floor >= 0.0) {
            return fail("affinity width must be positive and floor non-negative");
        }
        if !(self.cell_dlat > 0.0 && self.cell_dlon > 0.0) {
            return fail("cell size must be positive");
        }
        Ok(())
    }

    pub fn n_zones(&self) -> usize {
        self.grid_rows * self.grid_cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicInfo {
    pub id: usize,
    pub name: String,
    pub core_vocabulary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleTruth {
    pub article_id: String,
    pub topic: usize,
    pub zone: String,
    pub duplicate_of: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedMention {
    pub article_id: String,
    pub field: TextField,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub gazetteer_id: String,
    /// `None` for the broad city name.
    pub zone: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub topics: Vec<TopicInfo>,
    pub crime_topic: usize,
    pub zone_ids: Vec<String>,
    pub articles: Vec<ArticleTruth>,
    pub mentions: Vec<PlantedMention>,
    pub affinity: Vec<Vec<f64>>,
    pub zone_topic_expected: BTreeMap<String, Vec<f64>>,
    pub zone_topic_empirical: BTreeMap<String, Vec<f64>>,
    pub crime_rate: BTreeMap<String, Option<u32>>,
}

impl GroundTruth {
    pub fn topic_of(&self) -> BTreeMap<&str, usize> {
        self.articles.iter().map(|a| (a.article_id.as_str(), a.topic)).collect()
    }

    /// P(topic | zone) recomputed from the non-duplicate article records.
    pub fn recompute_zone_topic(&self) -> BTreeMap<String, Vec<f64>> {
        let k = self.topics.len();
        let mut counts: BTreeMap<String, Vec<f64>> =
            self.zone_ids.iter().map(|z| (z.clone(), vec![0.0; k])).collect();
        for a in self.articles.iter().filter(|a| a.duplicate_of.is_none()) {
            counts.get_mut(&a.zone).expect("known zone")[a.topic] += 1.0;
        }
        for v in counts.values_mut() {
            let n: f64 = v.iter().sum();
            if n > 0.0 {
                v.iter_mut().for_each(|x| *x /= n);
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub articles: Vec<Article>,
    pub gazetteer: Vec<GazetteerRecord>,
    pub zones: Vec<DataZone>,
    pub annotations: Vec<AnnotatedPair>,
    pub truth: GroundTruth,
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const GAZETTEER_FILE: &str = "gazetteer.csv";
pub const ZONES_FILE: &str = "zones.geojson";
pub const ANNOTATIONS_FILE: &str = "annotations.csv";
pub const TRUTH_FILE: &str = "ground_truth.json";

impl SynthCorpus {
    pub fn corpus_jsonl(&self) -> Result<String> {
        let mut s = String::new();
        for a in &self.articles {
            s.push_str(&serde_json::to_string(a)?);
            s.push('\n');
        }
        Ok(s)
    }

    /// Writes the five files into `dir`, creating it if needed.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, bytes: &[u8]| {
            let p = dir.join(name);
            fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
        };
        write(CORPUS_FILE, self.corpus_jsonl()?.as_bytes())?;
        let mut gaz = Vec::new();
        write_gazetteer_csv(&self.gazetteer, &mut gaz)?;
        write(GAZETTEER_FILE, &gaz)?;
        write(ZONES_FILE, write_zones_geojson(&self.zones)?.as_bytes())?;
        let mut ann = Vec::new();
        write_annotations(&self.annotations, &mut ann)?;
        write(ANNOTATIONS_FILE, &ann)?;
        let mut truth = serde_json::to_string_pretty(&self.truth)?;
        truth.push('\n');
        write(TRUTH_FILE, truth.as_bytes())
    }
}

struct WordFactory {
    used: BTreeSet<String>,
    lexicon: FunctionWordLexicon,
}

impl WordFactory {
    fn word(&mut self, rng: &mut ChaCha8Rng) -> String {
        const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st"];
        const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
        loop {
            let syllables = rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(rng).expect("non-empty"));
                w.push_str(VOWELS.choose(rng).expect("non-empty"));
            }
            if rng.random_bool(0.5) {
                w.push_str(["n", "r", "l", "s"].choose(rng).expect("non-empty"));
            }
            if !self.lexicon.is_function_word(&w) && self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

fn capitalise(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Cells chosen greedily to be far from each other, starting at the first.
fn spread_cells(rows: usize, cols: usize, k: usize) -> Vec<usize> {
    let pos = |i: usize| ((i / cols) as f64, (i % cols) as f64);
    let d2 = |a: usize, b: usize| {
        let (pa, pb) = (pos(a), pos(b));
        (pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)
    };
    let mut chosen = vec![0];
    while chosen.len() < k {
        let next = (0..rows * cols)
            .filter(|i| !chosen.contains(i))
            .max_by(|&a, &b| {
                let da = chosen.iter().map(|&c| d2(a, c)).fold(f64::INFINITY, f64::min);
                let db = chosen.iter().map(|&c| d2(b, c)).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("more cells than topics");
        chosen.push(next);
    }
    chosen
}

/// Largest-remainder apportionment of `n` items by `weights` (sum 1).
fn quota(n: usize, weights: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut out: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let short = n - out.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        out[i] += 1;
    }
    out
}

struct Place {
    gazetteer_id: String,
    name: String,
    zone: usize,
}

struct Draft {
    title: String,
    body: String,
    mentions: Vec<(TextField, usize, usize, usize)>,
}

struct Builder<'a> {
    spec: &'a SynthSpec,
    rng: ChaCha8Rng,
    core: Vec<Vec<String>>,
    core_weights: WeightedIndex<f64>,
    filler: Vec<String>,
}

impl Builder<'_> {
    fn content_word(&mut self, topic: usize) -> String {
        let u: f64 = self.rng.random();
        if u < self.spec.core_fraction {
            self.core[topic][self.core_weights.sample(&mut self.rng)].clone()
        } else if u < self.spec.core_fraction + self.spec.function_fraction {
            FUNCTION_WORDS.choose(&mut self.rng).expect("non-empty").to_string()
        } else {
            self.filler.choose(&mut self.rng).expect("non-empty").clone()
        }
    }

    fn sentence_words(&mut self, topic: usize, len: usize) -> Vec<String> {
        (0..len).map(|_| self.content_word(topic)).collect()
    }

    /// Joins words into text, recording the byte span of each place index
    /// found in `slots` (word position → place).
    fn render(words: &[String], slots: &BTreeMap<usize, usize>, offset: usize, out: &mut String) -> Vec<(usize, usize, usize)> {
        let mut spans = Vec::new();
        for (i, w) in words.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let start = offset + out.len();
            out.push_str(w);
            if let Some(&p) = slots.get(&i) {
                spans.push((start, offset + out.len(), p));
            }
        }
        spans
    }

    fn article(&mut self, topic: usize, places: &[usize], all_places: &[Place]) -> Draft {
        let spec = self.spec;
        let (s0, s1) = spec.sentences_per_article;
        let n_sent = self.rng.random_range(s0..=s1);
        let mut sentences: Vec<(Vec<String>, BTreeMap<usize, usize>)> = (0..n_sent)
            .map(|_| {
                let len = self.rng.random_range(spec.words_per_sentence.0..=spec.words_per_sentence.1);
                (self.sentence_words(topic, len), BTreeMap::new())
            })
            .collect();

        let mut title_places = Vec::new();
        let mut body_places = places.to_vec();
        if self.rng.random_bool(spec.title_mention_rate) {
            title_places.push(body_places.remove(0));
        }
        for p in body_places {
            let s = self.rng.random_range(0..n_sent);
            let (words, slots) = &mut sentences[s];
            let at = self.rng.random_range(1..=words.len());
            let prep = PREPOSITIONS.choose(&mut self.rng).expect("non-empty").to_string();
            words.insert(at, all_places[p].name.clone());
            words.insert(at, prep);
            *slots = slots
                .iter()
                .map(|(&k, &v)| (if k >= at { k + 2 } else { k }, v))
                .collect();
            slots.insert(at + 1, p);
        }

        let mut mentions = Vec::new();
        let mut body = String::new();
        for (i, (mut words, slots)) in sentences.into_iter().enumerate() {
            words[0] = capitalise(&words[0]);
            if i > 0 {
                body.push(' ');
            }
            let offset = body.len();
            let mut text = String::new();
            for (start, end, p) in Self::render(&words, &slots, offset, &mut text) {
                mentions.push((TextField::Body, start, end, p));
            }
            body.push_str(&text);
            body.push('.');
        }
        if self.rng.random_bool(spec.boilerplate_rate) {
            body.push(' ');
            body.push_str(BOILERPLATE);
        }

        let tlen = self.rng.random_range(4..=7);
        let mut twords = self.sentence_words(topic, tlen);
        let mut tslots = BTreeMap::new();
        if let Some(&p) = title_places.first() {
            let at = self.rng.random_range(1..=twords.len());
            twords.insert(at, all_places[p].name.clone());
            twords.insert(at, "in".to_string());
            tslots.insert(at + 1, p);
        }
        twords[0] = capitalise(&twords[0]);
        let mut title = String::new();
        for (start, end, p) in Self::render(&twords, &tslots, 0, &mut title) {
            mentions.push((TextField::Title, start, end, p));
        }
        Draft { title, body, mentions }
    }
}

/// Builds a corpus, gazetteer, zone set, annotations and ground truth.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_zones = spec.n_zones();

    let mut factory = WordFactory { used: BTreeSet::new(), lexicon: FunctionWordLexicon::bundled() };
    let core: Vec<Vec<String>> = (0..spec.n_topics)
        .map(|_| (0..spec.core_vocab_per_topic).map(|_| factory.word(&mut rng)).collect())
        .collect();
    let filler: Vec<String> = (0..spec.filler_vocab).map(|_| factory.word(&mut rng)).collect();

    // Zones.
    let mut zones = Vec::with_capacity(n_zones);
    let mut zone_ids = Vec::with_capacity(n_zones);
    let cell = |z: usize| (z / spec.grid_cols, z % spec.grid_cols);
    let corner = |z: usize| {
        let (r, c) = cell(z);
        (spec.origin_lat - r as f64 * spec.cell_dlat, spec.origin_lon + c as f64 * spec.cell_dlon)
    };
    for z in 0..n_zones {
        let (r, c) = cell(z);
        let row_name = ROW_NAMES.get(r).map_or_else(|| format!("Blockton Row {}", r + 1), |s| s.to_string());
        let (top, left) = corner(z);
        let bottom = top - spec.cell_dlat;
        let right = left + spec.cell_dlon;
        let ring = vec![(top, left), (top, right), (bottom, right), (bottom, left), (top, left)];
        let id = format!("BZ{:04}", z + 1);
        zones.push(DataZone::new(&id, format!("{row_name} - {:02}", c + 1), ring, None)?);
        zone_ids.push(id);
    }

    // Gazetteer.
    let mut gazetteer = Vec::new();
    let mut places: Vec<Place> = Vec::new();
    let mut zone_places: Vec<Vec<usize>> = vec![Vec::new(); n_zones];
    let mut shared_street: Vec<Option<usize>> = vec![None; n_zones];
    let inner = |z: usize, rng: &mut ChaCha8Rng| {
        let (top, left) = corner(z);
        let lat = top - spec.cell_dlat * rng.random_range(0.25..0.75);
        let lon = left + spec.cell_dlon * rng.random_range(0.25..0.75);
        (lat, lon)
    };
    let mut add = |name: String, (lat, lon): (f64, f64), postcode: String, kind: PlaceKind, zone: Option<usize>| {
        let id = format!("G{:05}", gazetteer.len() + 1);
        gazetteer.push(GazetteerRecord {
            id: id.clone(),
            name: name.clone(),
            lat,
            lon,
            postcode_district: postcode,
            kind: Some(kind),
            priority: None,
        });
        places.push(Place { gazetteer_id: id, name, zone: zone.unwrap_or(usize::MAX) });
        places.len() - 1
    };
    for z in 0..n_zones {
        let postcode = format!("EB{}", z + 1);
        for _ in 0..spec.places_per_zone {
            let (suffix, kind) = *SUFFIXES.choose(&mut rng).expect("non-empty");
            let stem = capitalise(&factory.word(&mut rng));
            let p = add(format!("{stem} {suffix}"), inner(z, &mut rng), postcode.clone(), kind, Some(z));
            zone_places[z].push(p);
        }
        let (r, c) = cell(z);
        if r % 2 == 0 && c % 2 == 0 {
            let p = add(SHARED_STREET.to_string(), inner(z, &mut rng), postcode, PlaceKind::Street, Some(z));
            shared_street[z] = Some(p);
        }
    }
    let centre_zone = (spec.grid_rows / 2) * spec.grid_cols + spec.grid_cols / 2;
    let city = add(CITY_NAME.to_string(), inner(centre_zone, &mut rng), "EB0".into(), PlaceKind::Settlement, None);

    // Affinity and expected zone mix.
    let homes = spread_cells(spec.grid_rows, spec.grid_cols, spec.n_topics);
    let affinity: Vec<Vec<f64>> = homes
        .iter()
        .map(|&h| {
            let (hr, hc) = cell(h);
            let row: Vec<f64> = (0..n_zones)
                .map(|z| {
                    let (r, c) = cell(z);
                    let d2 = (r as f64 - hr as f64).powi(2) + (c as f64 - hc as f64).powi(2);
                    spec.affinity_floor + (-d2 / (2.0 * spec.affinity_width.powi(2))).exp()
                })
                .collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let per_topic: Vec<usize> = (0..spec.n_topics)
        .map(|t| spec.n_articles / spec.n_topics + usize::from(t < spec.n_articles % spec.n_topics))
        .collect();
    let prior: Vec<f64> = per_topic.iter().map(|&n| n as f64 / spec.n_articles as f64).collect();
    let zone_topic_expected: BTreeMap<String, Vec<f64>> = (0..n_zones)
        .map(|z| {
            let v: Vec<f64> = (0..spec.n_topics).map(|t| prior[t] * affinity[t][z]).collect();
            let s: f64 = v.iter().sum();
            (zone_ids[z].clone(), v.into_iter().map(|x| x / s).collect())
        })
        .collect();

    // Crime statistic follows the designated topic's expected share.
    let mut suppressed: Vec<usize> = (0..n_zones).collect();
    suppressed.shuffle(&mut rng);
    suppressed.truncate(spec.suppressed_zones);
    let crime_rate: BTreeMap<String, Option<u32>> = (0..n_zones)
        .map(|z| {
            let v = (!suppressed.contains(&z))
                .then(|| (zone_topic_expected[&zone_ids[z]][spec.crime_topic] * 10_000.0).round() as u32);
            (zone_ids[z].clone(), v)
        })
        .collect();
    for z in &mut zones {
        z.crime_rate = crime_rate[&z.id];
    }

    // Article plan: topic quotas per zone, shuffled.
    let mut plan: Vec<(usize, usize)> = Vec::with_capacity(spec.n_articles);
    for t in 0..spec.n_topics {
        for (z, &n) in quota(per_topic[t], &affinity[t]).iter().enumerate() {
            plan.extend(std::iter::repeat_n((t, z), n));
        }
    }
    plan.shuffle(&mut rng);

    let zipf: Vec<f64> = (0..spec.core_vocab_per_topic).map(|r| 1.0 / ((r + 1) as f64).powf(0.7)).collect();
    let mut b = Builder {
        spec,
        rng,
        core: core.clone(),
        core_weights: WeightedIndex::new(&zipf).map_err(|e| Error::Invalid(e.to_string()))?,
        filler,
    };
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date");
    let mut articles = Vec::new();
    let mut truths = Vec::new();
    let mut mentions = Vec::new();
    let mut counts = vec![vec![0.0; spec.n_topics]; n_zones];
    let mut drafts = Vec::new();
    for (i, &(topic, zone)) in plan.iter().enumerate() {
        let id = format!("syn-{:05}", i + 1);
        let n_specific = b.rng.random_range(spec.mentions_per_article.0..=spec.mentions_per_article.1);
        let mut chosen: Vec<usize> = (0..n_specific)
            .map(|_| *zone_places[zone].choose(&mut b.rng).expect("places"))
            .collect();
        match shared_street[zone] {
            Some(hs) if b.rng.random_bool(spec.shared_street_rate) => chosen.push(hs),
            _ => {
                if b.rng.random_bool(spec.city_mention_rate) {
                    chosen.push(city);
                }
            }
        }
        let draft = b.article(topic, &chosen, &places);
        let published = start + Duration::days(b.rng.random_range(0..1096));
        let mut keywords = Vec::new();
        if b.rng.random_bool(spec.keyword_rate) {
            keywords.push(TOPIC_NAMES[topic].to_string());
        }
        if b.rng.random_bool(0.3) {
            keywords.push(EXTRA_TAGS.choose(&mut b.rng).expect("non-empty").to_string());
        }
        counts[zone][topic] += 1.0;
        truths.push(ArticleTruth { article_id: id.clone(), topic, zone: zone_ids[zone].clone(), duplicate_of: None });
        drafts.push((id.clone(), draft.mentions.clone()));
        articles.push(Article::new(id, draft.title, draft.body, published, keywords));
    }

    let mention_record = |id: &str, a: &Article, (field, start, end, p): (TextField, usize, usize, usize)| {
        let text = match field {
            TextField::Title => &a.title,
            TextField::Body => &a.body,
        };
        let place = &places[p];
        PlantedMention {
            article_id: id.to_string(),
            field,
            start,
            end,
            surface: text[start..end].to_string(),
            gazetteer_id: place.gazetteer_id.clone(),
            zone: zone_ids.get(place.zone).cloned(),
        }
    };
    for (a, (id, ms)) in articles.iter().zip(&drafts) {
        mentions.extend(ms.iter().map(|&m| mention_record(id, a, m)));
    }

    // Republished copies lose their final sentence.
    let mut originals: Vec<usize> = (0..articles.len()).collect();
    originals.shuffle(&mut b.rng);
    originals.truncate(spec.n_republished);
    originals.sort_unstable();
    for (k, &o) in originals.iter().enumerate() {
        let src = articles[o].clone();
        let cut = src.sentences[src.sentences.len() - 2].end;
        let id = format!("syn-dup-{:03}", k + 1);
        let copy = Article::new(&id, &src.title, &src.body[..cut], src.published + Duration::days(1), src.keywords.clone());
        for &m in &drafts[o].1 {
            if m.0 == TextField::Title || m.2 <= cut {
                mentions.push(mention_record(&id, &copy, m));
            }
        }
        truths.push(ArticleTruth {
            article_id: id,
            topic: truths[o].topic,
            zone: truths[o].zone.clone(),
            duplicate_of: Some(src.id.clone()),
        });
        articles.push(copy);
    }

    // Annotations over the originals: same topic is "very related".
    let originals_only = &articles[..spec.n_articles];
    let candidates = sample_annotation_pairs(
        originals_only,
        spec.n_annotation_pairs.min(spec.n_articles * (spec.n_articles - 1) / 2),
        spec.annotation_bias,
        spec.seed ^ 0x5eed,
    )?;
    let topic_of: BTreeMap<&str, usize> = truths.iter().map(|t| (t.article_id.as_str(), t.topic)).collect();
    let annotations = candidates
        .into_iter()
        .map(|c| {
            let stratum = if topic_of[c.article_a.as_str()] == topic_of[c.article_b.as_str()] {
                Stratum::Very
            } else if c.shared_keywords > 0 {
                Stratum::Vaguely
            } else {
                Stratum::NotRelated
            };
            AnnotatedPair::new(c.article_a, c.article_b, stratum)
        })
        .collect::<Result<Vec<_>>>()?;

    let zone_topic_empirical = counts
        .into_iter()
        .enumerate()
        .map(|(z, v)| {
            let n: f64 = v.iter().sum();
            (zone_ids[z].clone(), v.into_iter().map(|x| if n > 0.0 { x / n } else { 0.0 }).collect())
        })
        .collect();

    let truth = GroundTruth {
        seed: spec.seed,
        topics: core
            .into_iter()
            .enumerate()
            .map(|(id, core_vocabulary)| TopicInfo { id, name: TOPIC_NAMES[id].to_string(), core_vocabulary })
            .collect(),
        crime_topic: spec.crime_topic,
        zone_ids,
        articles: truths,
        mentions,
        affinity,
        zone_topic_expected,
        zone_topic_empirical,
        crime_rate,
    };
    Ok(SynthCorpus { articles, gazetteer, zones, annotations, truth })
}

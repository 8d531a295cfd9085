//! The pipeline stages. Each stage runs its prerequisites first, then itself
//! unless its cached outputs are still valid.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use newsloc::characterise::{
    all_profiles, neighbourhood_mention_index, profile_pie_svg, profiles_json, write_profiles_csv,
    zone_mention_index, LocationProfile, ThemeMap,
};
use newsloc::cluster::{hdbscan, soft_memberships, top_terms, ArticleMembership, ClusterHierarchy, TermWeight};
use newsloc::corpus::{dedup, load_corpus, read_corpus, Article, CorpusFormat};
use newsloc::evaluate::{
    error_partition, grid_search, macro_f1, pair_confusion, read_annotations, spearman_per_cluster, write_grid_csv,
    AnnotatedPair,
};
use newsloc::geoparse::{
    build_gazetteer, load_gazetteer_records, load_zones, rollup_neighbourhoods, ArticleMentions, Geoparser,
    ZoneIndex,
};
use newsloc::preprocess::{filter_articles, Blocklist, FunctionWordLexicon, Preprocessor, TokenizedArticle};
use newsloc::synthgen::{generate, ANNOTATIONS_FILE, CORPUS_FILE, GAZETTEER_FILE, ZONES_FILE};
use newsloc::vectorize::{
    build_vocabulary, read_embedding_bin, tfidf, umap_reduce, write_embedding_bin, write_embedding_csv, SparseVector,
    Vocabulary,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cache::{KeyBuilder, StageCache};
use crate::config::PipelineConfig;

pub struct Pipeline {
    cfg: PipelineConfig,
    out: PathBuf,
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item)?);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

fn names(files: &[&str]) -> Vec<String> {
    files.iter().map(|s| s.to_string()).collect()
}

#[derive(Serialize, Deserialize)]
struct TfidfRow {
    article_id: String,
    vector: SparseVector,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, out: PathBuf) -> Self {
        Self { cfg, out }
    }

    fn stage(&self, name: &'static str, key: KeyBuilder) -> StageCache {
        StageCache::new(name, self.out.join(name), key.finish())
    }

    fn dir(&self, stage: &str) -> PathBuf {
        self.out.join(stage)
    }

    /// Configured input, or the file `synth` writes.
    fn input(&self, configured: &Option<PathBuf>, synth_file: &str) -> PathBuf {
        configured.clone().unwrap_or_else(|| self.dir("synth").join(synth_file))
    }

    fn blocklist(&self) -> Result<Blocklist> {
        match &self.cfg.paths.blocklist {
            Some(p) => Ok(Blocklist::load(p)?),
            None => Ok(Blocklist::new(&self.cfg.geoparse.blocklist)),
        }
    }

    fn preprocessor(&self) -> Result<Preprocessor> {
        match &self.cfg.paths.lexicon {
            Some(p) => Ok(Preprocessor { lexicon: FunctionWordLexicon::load(p)? }),
            None => Ok(Preprocessor::default()),
        }
    }

    fn annotations_path(&self) -> Option<PathBuf> {
        let p = self.input(&self.cfg.paths.annotations, ANNOTATIONS_FILE);
        if self.cfg.paths.annotations.is_some() || p.exists() {
            Some(p)
        } else {
            None
        }
    }

    fn annotations(&self, path: &Path) -> Result<Vec<AnnotatedPair>> {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok(read_annotations(file)?)
    }

    // ------------------------------------------------------------ stages

    pub fn synth(&self) -> Result<()> {
        let spec = self.cfg.synth_spec();
        let cache = self.stage("synth", KeyBuilder::new("synth").params(&spec));
        cache.run(|c| {
            let corpus = generate(&spec)?;
            corpus.write_to_dir(&c.dir)?;
            Ok(names(&[CORPUS_FILE, GAZETTEER_FILE, ZONES_FILE, ANNOTATIONS_FILE, newsloc::synthgen::TRUTH_FILE]))
        })?;
        Ok(())
    }

    pub fn ingest(&self) -> Result<PathBuf> {
        let source = self.input(&self.cfg.paths.corpus, CORPUS_FILE);
        let cache = self.stage("ingest", KeyBuilder::new("ingest").file(&source)?);
        cache.run(|c| {
            let articles = load_corpus(&source, CorpusFormat::from_path(&source))?;
            log::info!("ingest: {} articles from {}", articles.len(), source.display());
            write_jsonl(&c.path("articles.jsonl"), &articles)?;
            Ok(names(&["articles.jsonl"]))
        })?;
        Ok(self.dir("ingest").join("articles.jsonl"))
    }

    fn load_articles(path: &Path) -> Result<Vec<Article>> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(read_corpus(&text, CorpusFormat::Jsonl)?)
    }

    pub fn dedup(&self) -> Result<PathBuf> {
        let input = self.ingest()?;
        let cache = self.stage("dedup", KeyBuilder::new("dedup").params(&self.cfg.dedup).file(&input)?);
        cache.run(|c| {
            let (kept, report) = dedup(Self::load_articles(&input)?, &self.cfg.dedup);
            log::info!("dedup: {} of {} articles kept", report.unique_count, report.retrieved_count);
            write_jsonl(&c.path("articles.jsonl"), &kept)?;
            write_json(&c.path("report.json"), &report)?;
            Ok(names(&["articles.jsonl", "report.json"]))
        })?;
        Ok(self.dir("dedup").join("articles.jsonl"))
    }

    pub fn geoparse(&self) -> Result<PathBuf> {
        let articles = self.dedup()?;
        let gazetteer = self.input(&self.cfg.paths.gazetteer, GAZETTEER_FILE);
        let zones = self.input(&self.cfg.paths.zones, ZONES_FILE);
        let key = KeyBuilder::new("geoparse").file(&articles)?.file(&gazetteer)?.file(&zones)?;
        let cache = self.stage("geoparse", key);
        cache.run(|c| {
            let (gaz, rejected) = build_gazetteer(load_gazetteer_records(&gazetteer)?);
            if !rejected.is_empty() {
                log::warn!("geoparse: {} gazetteer records rejected", rejected.len());
            }
            let zones = load_zones(&zones)?;
            let neighbourhoods = rollup_neighbourhoods(&zones);
            let parser = Geoparser::new(gaz, ZoneIndex::new(zones));
            let mentions = parser.process_all(&Self::load_articles(&articles)?);
            let total: usize = mentions.iter().map(|m| m.mentions.len()).sum();
            log::info!("geoparse: {total} mentions in {} articles", mentions.len());
            write_jsonl(&c.path("mentions.jsonl"), &mentions)?;
            write_json(&c.path("gazetteer_rejected.json"), &rejected)?;
            write_json(&c.path("neighbourhoods.json"), &neighbourhoods)?;
            Ok(names(&["mentions.jsonl", "gazetteer_rejected.json", "neighbourhoods.json"]))
        })?;
        Ok(self.dir("geoparse").join("mentions.jsonl"))
    }

    pub fn vectorize(&self) -> Result<()> {
        let mentions_path = self.geoparse()?;
        let articles_path = self.dir("dedup").join("articles.jsonl");
        let params = (
            self.cfg.seed(),
            self.cfg.geoparse.clone(),
            self.cfg.vectorize.clone(),
            self.cfg.umap.clone(),
        );
        let key = KeyBuilder::new("vectorize")
            .params(&params)
            .file(&articles_path)?
            .file(&mentions_path)?
            .optional_file(self.cfg.paths.lexicon.as_deref())?
            .optional_file(self.cfg.paths.blocklist.as_deref())?;
        let cache = self.stage("vectorize", key);
        cache.run(|c| {
            let articles = Self::load_articles(&articles_path)?;
            let mentions: Vec<ArticleMentions> = read_jsonl(&mentions_path)?;
            if articles.len() != mentions.len() {
                bail!("mentions do not match the deduplicated corpus; rerun geoparse");
            }
            let all_ids: Vec<String> = articles.iter().map(|a| a.id.clone()).collect();
            let kept = filter_articles(
                articles.into_iter().zip(mentions).collect(),
                &self.blocklist()?,
                self.cfg.geoparse.max_distinct_mentions,
            );
            let kept_ids: std::collections::HashSet<&str> = kept.iter().map(|(a, _)| a.id.as_str()).collect();
            let filtered: Vec<&String> = all_ids.iter().filter(|id| !kept_ids.contains(id.as_str())).collect();
            log::info!("vectorize: {} articles dropped for too many distinct places", filtered.len());
            let pre = self.preprocessor()?;
            let docs: Vec<TokenizedArticle> = kept.iter().map(|(a, m)| pre.tokenize(a, &m.mentions)).collect();

            let tokens: Vec<&[String]> = docs.iter().map(|d| d.tokens.as_slice()).collect();
            let vocab = build_vocabulary(&tokens, self.cfg.vectorize.vocab_max_size, self.cfg.vectorize.vocab_min_count)?;
            let vectors: Vec<SparseVector> = docs.iter().map(|d| tfidf(&d.tokens, &vocab, docs.len())).collect();
            let ids: Vec<String> = docs.iter().map(|d| d.article_id.clone()).collect();
            let umap = self.cfg.umap.params(self.cfg.seed());
            let embedding = umap_reduce(ids.clone(), &vectors, &umap)?;
            log::info!("vectorize: {} terms, {} × {} embedding", vocab.len(), embedding.len(), embedding.dim());

            write_jsonl(&c.path("tokens.jsonl"), &docs)?;
            write_json(&c.path("filtered_out.json"), &filtered)?;
            write_json(&c.path("vocabulary.json"), &vocab)?;
            let rows: Vec<TfidfRow> =
                ids.into_iter().zip(vectors).map(|(article_id, vector)| TfidfRow { article_id, vector }).collect();
            write_jsonl(&c.path("tfidf.jsonl"), &rows)?;
            write_embedding_csv(&embedding, fs::File::create(c.path("embedding.csv"))?)?;
            let mut bin = Vec::new();
            write_embedding_bin(&embedding, &umap, &mut bin)?;
            fs::write(c.path("embedding.bin"), bin)?;
            Ok(names(&[
                "tokens.jsonl",
                "filtered_out.json",
                "vocabulary.json",
                "tfidf.jsonl",
                "embedding.csv",
                "embedding.bin",
            ]))
        })?;
        Ok(())
    }

    pub fn cluster(&self) -> Result<()> {
        self.vectorize()?;
        let v = self.dir("vectorize");
        let key = KeyBuilder::new("cluster")
            .params(&(&self.cfg.hdbscan, self.cfg.profile.top_terms))
            .file(&v.join("embedding.bin"))?
            .file(&v.join("tfidf.jsonl"))?
            .file(&v.join("vocabulary.json"))?;
        let cache = self.stage("cluster", key);
        cache.run(|c| {
            let file = fs::File::open(v.join("embedding.bin"))?;
            let (_, embedding) = read_embedding_bin(BufReader::new(file))?;
            let model = hdbscan(embedding.coordinates.view(), &self.cfg.hdbscan)?;
            log::info!("cluster: {} clusters, {} noise points", model.n_clusters(), model.noise_count());
            let memberships = soft_memberships(&model, &embedding)?;

            let mut labels = csv::Writer::from_path(c.path("labels.csv"))?;
            labels.write_record(["article_id", "cluster"])?;
            for (id, l) in embedding.article_ids.iter().zip(&model.labels) {
                labels.write_record([id.as_str(), &l.to_string()])?;
            }
            labels.flush()?;
            write_memberships_csv(&c.path("memberships.csv"), &memberships, model.n_clusters())?;
            write_json(&c.path("memberships.json"), &memberships)?;
            write_json(&c.path("model.json"), &model)?;

            let hierarchy = ClusterHierarchy::from_model(&model);
            fs::write(c.path("hierarchy.dot"), hierarchy.to_dot())?;
            write_json(&c.path("hierarchy.json"), &hierarchy)?;
            write_json(&c.path("themes_suggested.json"), &ThemeMap::suggest(&hierarchy))?;

            let vocab: Vocabulary = read_json(&v.join("vocabulary.json"))?;
            let rows: Vec<TfidfRow> = read_jsonl(&v.join("tfidf.jsonl"))?;
            let vectors: Vec<SparseVector> = rows.into_iter().map(|r| r.vector).collect();
            let mut terms: BTreeMap<usize, Vec<TermWeight>> = BTreeMap::new();
            for k in 0..model.n_clusters() {
                terms.insert(k, top_terms(k, &memberships, &vectors, &vocab, self.cfg.profile.top_terms)?);
            }
            write_json(&c.path("top_terms.json"), &terms)?;
            Ok(names(&[
                "labels.csv",
                "memberships.csv",
                "memberships.json",
                "model.json",
                "hierarchy.dot",
                "hierarchy.json",
                "themes_suggested.json",
                "top_terms.json",
            ]))
        })?;
        Ok(())
    }

    fn theme_map_path(&self) -> PathBuf {
        self.cfg.paths.theme_map.clone().unwrap_or_else(|| self.dir("cluster").join("themes_suggested.json"))
    }

    pub fn profile(&self) -> Result<()> {
        self.cluster()?;
        let memberships_path = self.dir("cluster").join("memberships.json");
        let mentions_path = self.dir("geoparse").join("mentions.jsonl");
        let hoods_path = self.dir("geoparse").join("neighbourhoods.json");
        let themes_path = self.theme_map_path();
        let key = KeyBuilder::new("profile")
            .params(&(self.cfg.profile.svg, &self.cfg.geoparse.blocklist))
            .file(&memberships_path)?
            .file(&mentions_path)?
            .file(&hoods_path)?
            .file(&themes_path)?
            .optional_file(self.cfg.paths.blocklist.as_deref())?;
        let cache = self.stage("profile", key);
        cache.run(|c| {
            let memberships: Vec<ArticleMembership> = read_json(&memberships_path)?;
            let mentions: Vec<ArticleMentions> = read_jsonl(&mentions_path)?;
            let neighbourhoods: Vec<newsloc::geoparse::Neighbourhood> = read_json(&hoods_path)?;
            let themes = ThemeMap::from_json(&fs::read_to_string(&themes_path)?)?;
            let n_clusters = memberships.first().map_or(0, ArticleMembership::n_clusters);
            themes.validate(n_clusters).with_context(|| format!("theme map {}", themes_path.display()))?;

            // Only articles that were clustered can contribute.
            let clustered: std::collections::HashSet<&str> = memberships.iter().map(|m| m.article_id.as_str()).collect();
            let mentions: Vec<ArticleMentions> =
                mentions.into_iter().filter(|m| clustered.contains(m.article_id.as_str())).collect();
            let zone_index = zone_mention_index(&mentions, &self.blocklist()?);
            let hood_index = neighbourhood_mention_index(&zone_index, &neighbourhoods);
            let (zones, _) = all_profiles(&zone_index, &memberships)?;
            let (hoods, _) = all_profiles(&hood_index, &memberships)?;
            log::info!("profile: {} zones and {} neighbourhoods profiled", zones.len(), hoods.len());

            write_profiles_csv(&zones, fs::File::create(c.path("zones.csv"))?)?;
            write_profiles_csv(&hoods, fs::File::create(c.path("neighbourhoods.csv"))?)?;
            write_json(&c.path("zone_profiles.json"), &zones)?;
            let json = serde_json::json!({
                "zones": profiles_json(&zones, &themes),
                "neighbourhoods": profiles_json(&hoods, &themes),
            });
            write_json(&c.path("profiles.json"), &json)?;
            let mut files = names(&["zones.csv", "neighbourhoods.csv", "zone_profiles.json", "profiles.json"]);
            if self.cfg.profile.svg {
                fs::create_dir_all(c.path("svg"))?;
                for (kind, set) in [("zone", &zones), ("neighbourhood", &hoods)] {
                    for p in set.iter() {
                        let name = format!("svg/{kind}_{}.svg", file_stem(&p.location_id));
                        fs::write(c.path(&name), profile_pie_svg(p, &themes))?;
                        files.push(name);
                    }
                }
            }
            Ok(files)
        })?;
        Ok(())
    }

    pub fn evaluate(&self) -> Result<()> {
        self.profile()?;
        let labels_path = self.dir("cluster").join("labels.csv");
        let profiles_path = self.dir("profile").join("zone_profiles.json");
        let zones_path = self.input(&self.cfg.paths.zones, ZONES_FILE);
        let annotations = self.annotations_path();
        let key = KeyBuilder::new("evaluate")
            .params(&self.cfg.evaluate)
            .file(&labels_path)?
            .file(&profiles_path)?
            .file(&zones_path)?
            .optional_file(annotations.as_deref())?;
        let cache = self.stage("evaluate", key);
        cache.run(|c| {
            let labels = read_labels(&labels_path)?;
            let mut metrics = serde_json::Map::new();
            match &annotations {
                Some(path) => {
                    let pairs = self.annotations(path)?;
                    let confusion = pair_confusion(&labels, &pairs, self.cfg.evaluate.outlier_policy)?;
                    let f1 = macro_f1(&confusion)?;
                    log::info!("evaluate: Macro-F1 {:.4} on {} pairs", f1.score, confusion.total());
                    metrics.insert("outlier_policy".into(), serde_json::to_value(self.cfg.evaluate.outlier_policy)?);
                    metrics.insert("confusion".into(), serde_json::to_value(confusion)?);
                    metrics.insert("macro_f1".into(), serde_json::to_value(f1)?);
                    metrics.insert("error_partition".into(), serde_json::to_value(error_partition(&labels, &pairs)?)?);
                }
                None => log::warn!("evaluate: no annotations found, skipping pair metrics"),
            }
            let profiles: Vec<LocationProfile> = read_json(&profiles_path)?;
            let crime: BTreeMap<String, Option<f64>> =
                load_zones(&zones_path)?.into_iter().map(|z| (z.id, z.crime_rate.map(f64::from))).collect();
            let report = spearman_per_cluster(&profiles, &crime)?;
            report.write_csv(fs::File::create(c.path("correlation.csv"))?)?;
            metrics.insert("correlation_zones".into(), report.n_zones.into());
            metrics.insert("correlation_suppressed".into(), report.n_suppressed.into());
            metrics.insert("mean_rho".into(), serde_json::to_value(report.mean_rho())?);
            write_json(&c.path("metrics.json"), &metrics)?;
            Ok(names(&["metrics.json", "correlation.csv"]))
        })?;
        Ok(())
    }

    pub fn grid(&self) -> Result<()> {
        self.vectorize()?;
        let tokens_path = self.dir("vectorize").join("tokens.jsonl");
        let annotations = self
            .annotations_path()
            .ok_or_else(|| anyhow!("grid search needs annotated pairs; set paths.annotations"))?;
        let base = self.cfg.clustering();
        let key = KeyBuilder::new("grid")
            .params(&(&self.cfg.grid, &base, &self.cfg.evaluate))
            .file(&tokens_path)?
            .file(&annotations)?;
        let cache = self.stage("grid", key);
        cache.run(|c| {
            let docs: Vec<TokenizedArticle> = read_jsonl(&tokens_path)?;
            let pairs = self.annotations(&annotations)?;
            let rows = grid_search(&docs, &pairs, &self.cfg.grid.spec(), &base, self.cfg.evaluate.outlier_policy);
            if let Some(best) = rows.first() {
                log::info!("grid: best {:?} at d={} n_neighbors={} vocab={}", best.macro_f1, best.d, best.n_neighbors, best.vocab);
            }
            write_grid_csv(&rows, fs::File::create(c.path("grid.csv"))?)?;
            Ok(names(&["grid.csv"]))
        })?;
        Ok(())
    }

    /// Runs every analysis stage and gathers the artifacts into `report/`.
    pub fn report(&self) -> Result<()> {
        self.evaluate()?;
        let with_grid = self.annotations_path().is_some();
        if with_grid {
            self.grid()?;
        }
        let mut sources: Vec<(PathBuf, String)> = vec![
            (self.dir("cluster").join("top_terms.json"), "top_terms.json".into()),
            (self.dir("cluster").join("hierarchy.dot"), "hierarchy.dot".into()),
            (self.dir("profile").join("zones.csv"), "profiles_zones.csv".into()),
            (self.dir("profile").join("neighbourhoods.csv"), "profiles_neighbourhoods.csv".into()),
            (self.dir("profile").join("profiles.json"), "profiles.json".into()),
            (self.dir("evaluate").join("correlation.csv"), "correlation.csv".into()),
            (self.dir("evaluate").join("metrics.json"), "metrics.json".into()),
        ];
        if with_grid {
            sources.push((self.dir("grid").join("grid.csv"), "grid.csv".into()));
        }
        let svg_dir = self.dir("profile").join("svg");
        if self.cfg.profile.svg && svg_dir.is_dir() {
            let mut svgs: Vec<_> = fs::read_dir(&svg_dir)?.collect::<std::io::Result<Vec<_>>>()?;
            svgs.sort_by_key(|e| e.file_name());
            for e in svgs {
                sources.push((e.path(), format!("svg/{}", e.file_name().to_string_lossy())));
            }
        }
        let mut key = KeyBuilder::new("report");
        for (src, name) in &sources {
            key = key.params(name).file(src)?;
        }
        let cache = self.stage("report", key);
        cache.run(|c| {
            let mut files = Vec::new();
            for (src, name) in &sources {
                let dest = c.path(name);
                if let Some(parent) = dest.parent() {
                    fs::create_dir_all(parent)?;
                }
                fs::copy(src, &dest).with_context(|| format!("copying {}", src.display()))?;
                files.push(name.clone());
            }
            Ok(files)
        })?;
        Ok(())
    }
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn write_memberships_csv(path: &Path, memberships: &[ArticleMembership], k: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["article_id".to_string()];
    header.extend((0..k).map(|c| format!("c{c}")));
    header.push("noise".into());
    w.write_record(&header)?;
    for m in memberships {
        let mut row = vec![m.article_id.clone()];
        row.extend(m.probs.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_labels(path: &Path) -> Result<HashMap<String, i32>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = HashMap::new();
    for rec in r.deserialize::<(String, i32)>() {
        let (id, label) = rec?;
        out.insert(id, label);
    }
    Ok(out)
}

//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use newsloc::corpus::DedupParams;
use newsloc::evaluate::{GridSpec, OutlierPolicy};
use newsloc::pipeline::ClusteringParams;
use newsloc::synthgen::SynthSpec;
use newsloc::vectorize::{UmapParams, DEFAULT_MAX_SIZE, DEFAULT_MIN_COUNT};
use serde::{Deserialize, Serialize};

/// Problems with the configuration itself; these exit with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub dedup: DedupParams,
    #[serde(default)]
    pub geoparse: GeoparseConfig,
    #[serde(default)]
    pub vectorize: VectorizeConfig,
    #[serde(default)]
    pub umap: UmapConfig,
    #[serde(default)]
    pub hdbscan: newsloc::cluster::HdbscanParams,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub synth: SynthConfig,
}

/// Input and output locations. Missing inputs default to the files written
/// by `synth` under the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub zones: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub blocklist: Option<PathBuf>,
    pub theme_map: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeoparseConfig {
    pub max_distinct_mentions: usize,
    /// Used when no blocklist file is given.
    pub blocklist: Vec<String>,
}

impl Default for GeoparseConfig {
    fn default() -> Self {
        Self { max_distinct_mentions: 40, blocklist: vec!["Edinburgh".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VectorizeConfig {
    pub vocab_max_size: usize,
    pub vocab_min_count: usize,
}

impl Default for VectorizeConfig {
    fn default() -> Self {
        Self { vocab_max_size: DEFAULT_MAX_SIZE, vocab_min_count: DEFAULT_MIN_COUNT }
    }
}

/// UMAP settings; the seed comes from the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UmapConfig {
    pub n_components: usize,
    pub n_neighbors: usize,
    pub n_epochs: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    pub repulsion_strength: f64,
}

impl Default for UmapConfig {
    fn default() -> Self {
        let p = UmapParams::with_seed(0);
        Self {
            n_components: p.n_components,
            n_neighbors: p.n_neighbors,
            n_epochs: p.n_epochs,
            min_dist: p.min_dist,
            spread: p.spread,
            negative_sample_rate: p.negative_sample_rate,
            learning_rate: p.learning_rate,
            repulsion_strength: p.repulsion_strength,
        }
    }
}

impl UmapConfig {
    pub fn params(&self, seed: u64) -> UmapParams {
        UmapParams {
            n_components: self.n_components,
            n_neighbors: self.n_neighbors,
            n_epochs: self.n_epochs,
            min_dist: self.min_dist,
            spread: self.spread,
            negative_sample_rate: self.negative_sample_rate,
            learning_rate: self.learning_rate,
            repulsion_strength: self.repulsion_strength,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub svg: bool,
    pub top_terms: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { svg: false, top_terms: 30 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    pub outlier_policy: OutlierPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub vocab_sizes: Vec<usize>,
    pub umap_dims: Vec<usize>,
    pub umap_neighbors: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { vocab_sizes: vec![100, 1000, 20_000], umap_dims: vec![2, 5, 10], umap_neighbors: vec![5, 15, 50] }
    }
}

impl GridConfig {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            vocab_sizes: self.vocab_sizes.clone(),
            umap_dims: self.umap_dims.clone(),
            umap_neighbors: self.umap_neighbors.clone(),
        }
    }
}

/// Generator settings; `seed` is taken from the top level.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SynthConfig(pub SynthSpec);

impl PipelineConfig {
    /// Parses, resolves relative paths against `base` and validates.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {}", e.message())))?;
        cfg.paths.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    /// Checks required keys and positivity of every numeric parameter.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, why: &str| Err(ConfigError(format!("invalid config: `{key}` {why}")));
        if self.seed.is_none() {
            return bad("seed", "is required (set it in the config or pass --seed)");
        }
        let d = &self.dedup;
        if !(d.min_shared_fraction > 0.0 && d.min_shared_fraction <= 1.0) {
            return bad("dedup.min_shared_fraction", "must be in (0, 1]");
        }
        let positive: [(&str, usize); 13] = [
            ("dedup.min_sentence_words", d.min_sentence_words),
            ("dedup.boilerplate_doc_count", d.boilerplate_doc_count),
            ("geoparse.max_distinct_mentions", self.geoparse.max_distinct_mentions),
            ("vectorize.vocab_max_size", self.vectorize.vocab_max_size),
            ("vectorize.vocab_min_count", self.vectorize.vocab_min_count),
            ("umap.n_components", self.umap.n_components),
            ("umap.n_neighbors", self.umap.n_neighbors),
            ("umap.n_epochs", self.umap.n_epochs),
            ("umap.negative_sample_rate", self.umap.negative_sample_rate),
            ("hdbscan.min_cluster_size", self.hdbscan.min_cluster_size),
            ("hdbscan.min_samples", self.hdbscan.min_samples),
            ("profile.top_terms", self.profile.top_terms),
            ("synth.n_articles", self.synth.0.n_articles),
        ];
        for (key, v) in positive {
            if v == 0 {
                return bad(key, "must be positive");
            }
        }
        for (key, v) in [
            ("umap.min_dist", self.umap.min_dist),
            ("umap.spread", self.umap.spread),
            ("umap.learning_rate", self.umap.learning_rate),
            ("umap.repulsion_strength", self.umap.repulsion_strength),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(key, "must be a positive number");
            }
        }
        if self.hdbscan.min_cluster_size < 2 {
            return bad("hdbscan.min_cluster_size", "must be at least 2");
        }
        for (key, v) in [
            ("grid.vocab_sizes", &self.grid.vocab_sizes),
            ("grid.umap_dims", &self.grid.umap_dims),
            ("grid.umap_neighbors", &self.grid.umap_neighbors),
        ] {
            if v.is_empty() || v.contains(&0) {
                return bad(key, "must be a non-empty list of positive values");
            }
        }
        let mut spec = self.synth.0.clone();
        spec.seed = self.seed();
        spec.validate().map_err(|e| ConfigError(format!("invalid config: synth: {e}")))?;
        Ok(())
    }

    pub fn clustering(&self) -> ClusteringParams {
        ClusteringParams {
            vocab_max_size: self.vectorize.vocab_max_size,
            vocab_min_count: self.vectorize.vocab_min_count,
            umap: self.umap.params(self.seed()),
            hdbscan: self.hdbscan,
        }
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec { seed: self.seed(), ..self.synth.0.clone() }
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.gazetteer,
            &mut self.zones,
            &mut self.annotations,
            &mut self.lexicon,
            &mut self.blocklist,
            &mut self.theme_map,
            &mut self.output,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

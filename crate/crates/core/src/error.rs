use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("record {index}: {reason}")]
    Record { index: usize, reason: String },
    #[error("invalid gazetteer record {id:?}: {reason}")]
    Gazetteer { id: String, reason: String },
    #[error("invalid zone {id:?}: {reason}")]
    Zone { id: String, reason: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("vocabulary is empty after filtering (min_count = {min_count})")]
    EmptyVocabulary { min_count: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("non-finite distance between points {0} and {1}")]
    NonFiniteDistance(usize, usize),
    #[error("unknown cluster id {0}")]
    UnknownCluster(usize),
    #[error("no label for article {0:?}")]
    MissingLabel(String),
    #[error("cannot evaluate zero pairs")]
    NoPairs,
    #[error("requested {requested} pairs but only {available} exist")]
    NotEnoughPairs { requested: usize, available: usize },
    #[error("need at least 3 usable zones, got {0}")]
    TooFewZones(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
